#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fdsense/model_scores.hpp"

namespace fdsense {

/// Monte Carlo estimate of FD(reference || candidate).
struct FdEstimate {
  double value = 0.0;
  std::size_t m = 0;
  /// Delta_i = ||s_ref(theta_i) - s_cand(theta_i)||^2, when retained.
  std::optional<Vector> per_sample;
};

enum class CrossConvention { with_factor_2, uncorrected };

/// Loss / prior / interaction split of the FD.
///
/// With a = grad L_ref - grad L and b = s_pi_ref - s_pi, the score difference
/// is b - a, so ||b - a||^2 = ||a||^2 + ||b||^2 - 2 a.b. `cross_with_factor_2`
/// holds -2 mean(a.b) and reconstructs the total; `cross_literal` holds the
/// uncorrected mean(a.b).
struct FdDecomposition {
  double loss_term = 0.0;
  double prior_term = 0.0;
  double cross_with_factor_2 = 0.0;
  double cross_literal = 0.0;
  double total = 0.0;
  CrossConvention convention = CrossConvention::with_factor_2;

  double cross_term() const {
    return convention == CrossConvention::with_factor_2 ? cross_with_factor_2 : cross_literal;
  }
};

FdEstimate estimate_fd(const PrecomputedScores& ref_scores, const PrecomputedScores& cand_scores,
                       bool keep_per_sample = true);

FdDecomposition decompose_fd(const PrecomputedScores& ref_loss_grads, const PrecomputedScores& cand_loss_grads,
                             const PrecomputedScores& ref_prior_scores, const PrecomputedScores& cand_prior_scores,
                             CrossConvention convention = CrossConvention::with_factor_2);

/// Contribution of each block of coordinates. `blocks` must partition
/// {0, ..., d-1}.
Vector per_dimension_fd(const PrecomputedScores& ref_scores, const PrecomputedScores& cand_scores,
                        const std::vector<std::vector<std::size_t>>& blocks);

/// Integrated autocorrelation time of a series (Sokal windowing, c = 5).
double integrated_autocorr_time(std::span<const double> series);

struct ErrorBound {
  double value = 0.0;
  double variance = 0.0;
  double autocorr_time = 1.0;
};

/// Heuristic finite-sample error bar sqrt(C')/(sqrt(m) delta).
///
/// C' is a plug-in: the sample variance of the per-sample terms, multiplied
/// by their integrated autocorrelation time when origin is mcmc (computed
/// per chain when chain ids are given). It is a diagnostic, not a proven
/// constant.
ErrorBound chebyshev_error_bound(std::span<const double> per_sample, double delta,
                                 SampleOrigin origin = SampleOrigin::iid,
                                 const std::optional<std::vector<int>>& chain_ids = std::nullopt);

}  // namespace fdsense
