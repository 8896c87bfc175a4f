#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdsense/linalg.hpp"

namespace fdsense {

enum class SampleOrigin { iid, mcmc };

/// m draws of a d-dimensional parameter from the reference posterior.
class SampleSet {
 public:
  explicit SampleSet(RowMatrix draws, SampleOrigin origin = SampleOrigin::iid,
                     std::optional<std::vector<int>> chain_ids = std::nullopt);

  std::size_t size() const { return static_cast<std::size_t>(draws_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(draws_.cols()); }
  const RowMatrix& draws() const { return draws_; }
  ParamPoint row(std::size_t i) const { return draws_.row(static_cast<Eigen::Index>(i)).transpose(); }
  SampleOrigin origin() const { return origin_; }
  const std::optional<std::vector<int>>& chain_ids() const { return chain_ids_; }

 private:
  RowMatrix draws_;
  SampleOrigin origin_;
  std::optional<std::vector<int>> chain_ids_;
};

/// Score values evaluated elsewhere (external model code or
/// eval_scores_over_samples), aligned row-by-row with a SampleSet.
class PrecomputedScores {
 public:
  PrecomputedScores(RowMatrix values, std::string label);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  const RowMatrix& values() const { return values_; }
  const std::string& label() const { return label_; }

  /// Throws ContractError unless this matrix has the samples' shape.
  void require_aligned(const SampleSet& samples) const;

 private:
  RowMatrix values_;
  std::string label_;
};

/// A map from parameter points to gradient vectors of length dim().
/// Calls validate the input length and the finiteness of the output.
class ScoreField {
 public:
  using Fn = std::function<Vector(const ParamPoint&)>;

  ScoreField(std::size_t dim, Fn fn);

  std::size_t dim() const { return dim_; }
  Vector operator()(const ParamPoint& theta) const;

  static ScoreField zero(std::size_t dim);
  /// Field that applies `grad` to coordinate `coord` only.
  static ScoreField coordinate(std::size_t dim, std::size_t coord, std::function<double(double)> grad);

  friend ScoreField operator+(const ScoreField& a, const ScoreField& b);
  friend ScoreField operator-(const ScoreField& a, const ScoreField& b);

 private:
  std::size_t dim_;
  Fn fn_;
};

/// Score of a half-Cauchy(0, scale) density acting on one coordinate.
/// Not an exponential family, so only usable as a reference prior.
ScoreField half_cauchy_score(std::size_t dim, std::size_t coord, double scale = 1.0);

/// One factor of a (possibly composite) exponential-family prior: which
/// parameter coordinates it touches and where its natural parameters sit.
struct PriorBlock {
  std::string name;
  std::vector<std::size_t> coords;
  std::size_t lambda_offset = 0;
  std::size_t lambda_size = 0;
};

/// Natural exponential-family prior
///   pi(theta | lambda) ∝ exp(lambda^T T(theta)) g(theta).
/// The log-partition function is never needed for scores and is not stored.
class ExpFamilyPrior {
 public:
  using StatFn = std::function<Vector(const ParamPoint&)>;
  using JacFn = std::function<Matrix(const ParamPoint&)>;

  ExpFamilyPrior(std::size_t dim, std::size_t stat_dim, StatFn stat, JacFn stat_jacobian,
                 StatFn grad_log_base, Vector lambda, std::vector<PriorBlock> blocks);

  std::size_t dim() const { return dim_; }
  std::size_t stat_dim() const { return stat_dim_; }
  const Vector& lambda() const { return lambda_; }
  const std::vector<PriorBlock>& blocks() const { return blocks_; }
  /// Union of all block coordinates, ascending.
  std::vector<std::size_t> coords() const;

  Vector stat(const ParamPoint& theta) const;
  /// d_T x d_Theta; row k is the gradient of T_k.
  Matrix stat_jacobian(const ParamPoint& theta) const;
  Vector grad_log_base(const ParamPoint& theta) const;

  ExpFamilyPrior with_lambda(Vector lambda) const;
  ScoreField score_field() const;

 private:
  void check_point(const ParamPoint& theta) const;

  std::size_t dim_;
  std::size_t stat_dim_;
  StatFn stat_;
  JacFn stat_jacobian_;
  StatFn grad_log_base_;
  Vector lambda_;
  std::vector<PriorBlock> blocks_;
};

/// Gaussian family on the coordinates `coords` of a dim-dimensional
/// parameter, T = (theta_c, vec(theta_c theta_c^T)). Natural parameters are
/// laid out as lambda_0 (k entries) followed by Lambda_1 row-major (k*k).
ExpFamilyPrior gaussian_family(std::size_t dim, std::vector<std::size_t> coords, Vector lambda);

/// Inverse-gamma family on one positive coordinate, T = (log s, 1/s),
/// natural parameters (-(a+1), -b).
ExpFamilyPrior inverse_gamma_family(std::size_t dim, std::size_t coord, Vector lambda);

/// Independent product of factors; natural parameters are concatenated in
/// factor order. Factors must touch disjoint coordinates.
ExpFamilyPrior product_family(const std::vector<ExpFamilyPrior>& factors);

/// Loss that is linear in its hyperparameters, L = lambda_L^T l(theta).
class LinearLoss {
 public:
  using GradFn = std::function<Matrix(const ParamPoint&)>;

  LinearLoss(std::size_t dim, std::size_t loss_dim, GradFn grad_l, Vector lambda);

  std::size_t dim() const { return dim_; }
  std::size_t loss_dim() const { return loss_dim_; }
  const Vector& lambda() const { return lambda_; }
  /// d_L x d_Theta; row k is the gradient of l_k.
  Matrix grad_l(const ParamPoint& theta) const;
  /// Gradient of the full loss, grad_l^T lambda.
  Vector loss_gradient(const ParamPoint& theta) const;

  LinearLoss with_lambda(Vector lambda) const;
  ScoreField gradient_field() const;

 private:
  std::size_t dim_;
  std::size_t loss_dim_;
  GradFn grad_l_;
  Vector lambda_;
};

/// Gaussian copula perturbation of the prior coupling coordinates i and j.
struct GaussianCopulaScore {
  double lambda_c = 0.0;
  std::size_t i = 0;
  std::size_t j = 1;
};

/// prior(theta) - loss_grad(theta), the score of exp(-L) * pi.
Vector posterior_score(const ScoreField& prior, const ScoreField& loss_grad, const ParamPoint& theta);

Vector expfam_prior_score(const ExpFamilyPrior& prior, const ParamPoint& theta);

struct GaussianMoments {
  Vector mean;
  Matrix cov;
};

/// (Sigma^{-1} mu, -1/2 Sigma^{-1}), flattened as lambda_0 then Lambda_1 row-major.
Vector gaussian_natural_from_moment(const Vector& mean, const Matrix& cov);
GaussianMoments gaussian_moment_from_natural(const Vector& lambda0, const Matrix& lambda1);
/// Same, for the flattened layout produced by gaussian_natural_from_moment.
GaussianMoments gaussian_moment_from_natural(const Vector& flat);

/// (-(a+1), -b).
Vector invgamma_natural_from_shape_rate(double shape, double rate);
/// Inverse of invgamma_natural_from_shape_rate: returns (a, b).
std::pair<double, double> invgamma_shape_rate_from_natural(const Vector& lambda);

/// Gradient of log c_{lambda_c}(theta_i, theta_j); zero outside (i, j).
Vector copula_score(const GaussianCopulaScore& c, const ParamPoint& theta);
ScoreField copula_score_field(const GaussianCopulaScore& c, std::size_t dim);

/// Row i is field(samples.row(i)). Rows are evaluated in parallel; a failing
/// row raises EvaluationError naming the lowest failing index.
PrecomputedScores eval_scores_over_samples(const ScoreField& field, const SampleSet& samples,
                                           std::string label = "scores");

}  // namespace fdsense
