#include "fdsense/local_sensitivity.hpp"

#include <cmath>

#include "fdsense/errors.hpp"
#include "fdsense/kernels.hpp"

namespace fdsense {

ScoreJacobianField::ScoreJacobianField(std::size_t dim, std::size_t hyper_dim, Fn fn)
    : dim_(dim), hyper_dim_(hyper_dim), fn_(std::move(fn)) {}

Matrix ScoreJacobianField::operator()(const ParamPoint& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_) throw ContractError("score Jacobian evaluated at wrong dimension");
  Matrix j = fn_(theta);
  if (static_cast<std::size_t>(j.rows()) != dim_ || static_cast<std::size_t>(j.cols()) != hyper_dim_) {
    throw ContractError("score Jacobian has the wrong shape");
  }
  if (!j.allFinite()) throw EvaluationError("non-finite score Jacobian");
  return j;
}

ScoreJacobianField expfam_score_jacobian(const ExpFamilyPrior& prior) {
  return ScoreJacobianField(prior.dim(), prior.stat_dim(),
                            [prior](const ParamPoint& theta) -> Matrix { return prior.stat_jacobian(theta).transpose(); });
}

double directional_derivative(const SampleSet& samples, const PrecomputedScores& ref_scores,
                              const PrecomputedScores& cand_scores, const ScoreJacobianField& jac, const Vector& v) {
  ref_scores.require_aligned(samples);
  cand_scores.require_aligned(samples);
  if (jac.dim() != samples.dim()) throw ContractError("score Jacobian and samples differ in dimension");
  if (static_cast<std::size_t>(v.size()) != jac.hyper_dim()) {
    throw ContractError("direction has length " + std::to_string(v.size()) + ", expected " +
                        std::to_string(jac.hyper_dim()));
  }
  if (std::abs(v.norm() - 1.0) > 1e-10) throw ContractError("direction must have unit Euclidean norm");

  const std::size_t m = samples.size();
  std::vector<double> terms(m);
  kernels::parallel::for_each_index(m, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vector diff = (ref_scores.values().row(r) - cand_scores.values().row(r)).transpose();
    terms[i] = diff.dot(jac(samples.row(i)) * v);
  });
  return -2.0 * kernels::compensated_mean(terms);
}

}  // namespace fdsense
