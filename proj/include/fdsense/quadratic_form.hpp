#pragma once

#include <string>
#include <vector>

#include "fdsense/model_scores.hpp"

namespace fdsense {

/// lambda^T A lambda + b^T lambda + c with A symmetric PSD.
class QuadraticObjective {
 public:
  QuadraticObjective(Matrix a, Vector b, double c, std::string layout = {});

  std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  double c() const { return c_; }
  /// Human-readable description of the hyperparameter ordering.
  const std::string& layout() const { return layout_; }

  /// Smallest eigenvalue of A (dense symmetric solver up to dimension 64,
  /// Lanczos from a seeded random start above).
  double min_eigenvalue() const;
  double max_eigenvalue() const;
  /// min_eigenvalue / max(1, ||A||_2); the PSD check passes when >= -1e-10.
  double psd_margin() const;

  /// Gradient 2 A lambda + b.
  Vector gradient(const Vector& lambda) const;

  /// Principal sub-problem on the coordinates [offset, offset + size);
  /// c is carried over unchanged.
  QuadraticObjective sub_block(std::size_t offset, std::size_t size, double c) const;

 private:
  Matrix a_;
  Vector b_;
  double c_;
  std::string layout_;
};

/// Value at lambda; values within -1e-10 (1 + |c|) of zero are clamped to 0.
double evaluate(const QuadraticObjective& q, const Vector& lambda);

/// Joint loss + prior objective. J(theta) = [-grad_l^T, grad_T^T], the
/// hyperparameter vector is (lambda_L, lambda_pi). Cost O(m d_Lambda^2 d_Theta).
QuadraticObjective build_joint(const SampleSet& samples, const ExpFamilyPrior& prior, const LinearLoss& loss,
                               const PrecomputedScores& ref_scores);

/// Same, with the loss-gradient rows supplied externally: one matrix per
/// loss component, each m x d_Theta.
QuadraticObjective build_joint(const SampleSet& samples, const ExpFamilyPrior& prior,
                               const std::vector<PrecomputedScores>& loss_grads,
                               const PrecomputedScores& ref_scores);

/// Prior-only objective in lambda_pi. `ref_prior_scores` are scores of the
/// reference prior (the loss cancels). The constant only sums over the
/// coordinates the prior touches, so per-factor constants add up.
QuadraticObjective build_prior_only(const SampleSet& samples, const ExpFamilyPrior& prior,
                                    const PrecomputedScores& ref_prior_scores);

/// Loss-only objective (lambda - lambda_ref)^T A_L (lambda - lambda_ref).
QuadraticObjective build_loss_only(const SampleSet& samples, const LinearLoss& loss, const Vector& lambda_ref);
QuadraticObjective build_loss_only(const std::vector<PrecomputedScores>& loss_grads, const Vector& lambda_ref);

}  // namespace fdsense
