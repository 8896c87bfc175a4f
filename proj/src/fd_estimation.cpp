#include "fdsense/fd_estimation.hpp"

#include <map>

#include "fdsense/errors.hpp"
#include "fdsense/kernels.hpp"

namespace fdsense {

namespace {

void require_same_shape(const PrecomputedScores& a, const PrecomputedScores& b) {
  if (a.rows() != b.rows() || a.dim() != b.dim()) {
    throw ContractError("score matrices '" + a.label() + "' (" + std::to_string(a.rows()) + " x " +
                        std::to_string(a.dim()) + ") and '" + b.label() + "' (" + std::to_string(b.rows()) + " x " +
                        std::to_string(b.dim()) + ") are not aligned");
  }
}

double mean_of(const Vector& v) { return kernels::compensated_mean(std::span<const double>(v.data(), v.size())); }

}  // namespace

FdEstimate estimate_fd(const PrecomputedScores& ref_scores, const PrecomputedScores& cand_scores,
                       bool keep_per_sample) {
  require_same_shape(ref_scores, cand_scores);
  const RowMatrix diff = ref_scores.values() - cand_scores.values();
  Vector per_sample = kernels::parallel::row_dot(diff, diff);
  FdEstimate out;
  out.m = ref_scores.rows();
  out.value = mean_of(per_sample);
  if (keep_per_sample) out.per_sample = std::move(per_sample);
  return out;
}

FdDecomposition decompose_fd(const PrecomputedScores& ref_loss_grads, const PrecomputedScores& cand_loss_grads,
                             const PrecomputedScores& ref_prior_scores, const PrecomputedScores& cand_prior_scores,
                             CrossConvention convention) {
  require_same_shape(ref_loss_grads, cand_loss_grads);
  require_same_shape(ref_loss_grads, ref_prior_scores);
  require_same_shape(ref_loss_grads, cand_prior_scores);
  const RowMatrix loss_diff = ref_loss_grads.values() - cand_loss_grads.values();
  const RowMatrix prior_diff = ref_prior_scores.values() - cand_prior_scores.values();
  const RowMatrix score_diff = prior_diff - loss_diff;

  FdDecomposition d;
  d.convention = convention;
  d.loss_term = mean_of(kernels::parallel::row_dot(loss_diff, loss_diff));
  d.prior_term = mean_of(kernels::parallel::row_dot(prior_diff, prior_diff));
  const double inner = mean_of(kernels::parallel::row_dot(loss_diff, prior_diff));
  d.cross_with_factor_2 = -2.0 * inner;
  d.cross_literal = inner;
  d.total = mean_of(kernels::parallel::row_dot(score_diff, score_diff));
  return d;
}

Vector per_dimension_fd(const PrecomputedScores& ref_scores, const PrecomputedScores& cand_scores,
                        const std::vector<std::vector<std::size_t>>& blocks) {
  require_same_shape(ref_scores, cand_scores);
  const std::size_t d = ref_scores.dim();
  std::vector<int> owner(d, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (auto k : blocks[b]) {
      if (k >= d) throw ContractError("block index " + std::to_string(k) + " out of range for d = " + std::to_string(d));
      if (owner[k] != -1) throw ContractError("dimension " + std::to_string(k) + " appears in more than one block");
      owner[k] = static_cast<int>(b);
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (owner[k] == -1) throw ContractError("dimension " + std::to_string(k) + " is not covered by any block");
  }
  const RowMatrix diff = ref_scores.values() - cand_scores.values();
  Vector out(static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Vector rows(diff.rows());
    const auto& block = blocks[b];
    kernels::parallel::for_each_index(static_cast<std::size_t>(diff.rows()), [&](std::size_t i) {
      double s = 0.0;
      for (auto k : block) {
        const double v = diff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        s += v * v;
      }
      rows[static_cast<Eigen::Index>(i)] = s;
    });
    out[static_cast<Eigen::Index>(b)] = mean_of(rows);
  }
  return out;
}

double integrated_autocorr_time(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) return 1.0;
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (series[i] - mean) * (series[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (c0 <= 0.0) return 1.0;
  constexpr double kWindow = 5.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    tau += 2.0 * autocov(lag) / c0;
    if (static_cast<double>(lag) >= kWindow * tau) break;
  }
  return std::max(tau, 1.0 / static_cast<double>(n));
}

ErrorBound chebyshev_error_bound(std::span<const double> per_sample, double delta, SampleOrigin origin,
                                 const std::optional<std::vector<int>>& chain_ids) {
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("delta must lie in (0, 1)");
  if (per_sample.empty()) throw ContractError("error bound needs at least one per-sample term");
  const std::size_t m = per_sample.size();
  ErrorBound out;
  if (m > 1) {
    const double mean = kernels::parallel::compensated_sum(per_sample) / static_cast<double>(m);
    kernels::Neumaier ss;
    for (double x : per_sample) ss.add((x - mean) * (x - mean));
    out.variance = ss.value() / static_cast<double>(m - 1);
  }
  if (origin == SampleOrigin::mcmc && out.variance > 0.0) {
    if (chain_ids) {
      if (chain_ids->size() != m) throw ContractError("chain ids do not match the number of terms");
      std::map<int, std::vector<double>> chains;
      for (std::size_t i = 0; i < m; ++i) chains[(*chain_ids)[i]].push_back(per_sample[i]);
      double weighted = 0.0;
      for (const auto& [id, xs] : chains) weighted += static_cast<double>(xs.size()) * integrated_autocorr_time(xs);
      out.autocorr_time = weighted / static_cast<double>(m);
    } else {
      out.autocorr_time = integrated_autocorr_time(per_sample);
    }
  }
  out.value = std::sqrt(out.variance * out.autocorr_time) / (std::sqrt(static_cast<double>(m)) * delta);
  return out;
}

}  // namespace fdsense
