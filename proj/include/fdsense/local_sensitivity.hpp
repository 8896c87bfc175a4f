#pragma once

#include <functional>

#include "fdsense/model_scores.hpp"

namespace fdsense {

/// theta -> d_Theta x d_Lambda Jacobian of the prior score in the hyperparameters.
class ScoreJacobianField {
 public:
  using Fn = std::function<Matrix(const ParamPoint&)>;

  ScoreJacobianField(std::size_t dim, std::size_t hyper_dim, Fn fn);

  std::size_t dim() const { return dim_; }
  std::size_t hyper_dim() const { return hyper_dim_; }
  Matrix operator()(const ParamPoint& theta) const;

 private:
  std::size_t dim_;
  std::size_t hyper_dim_;
  Fn fn_;
};

/// For an exponential-family prior the score is linear in lambda and its
/// Jacobian is grad_T(theta)^T.
ScoreJacobianField expfam_score_jacobian(const ExpFamilyPrior& prior);

/// d/dmu of the empirical FD at lambda + mu v, mu = 0:
///   -(2/m) sum_i (s_ref(theta_i) - s_cand(theta_i))^T J(theta_i) v.
/// v must have unit Euclidean norm (within 1e-10).
double directional_derivative(const SampleSet& samples, const PrecomputedScores& ref_scores,
                              const PrecomputedScores& cand_scores, const ScoreJacobianField& jac, const Vector& v);

}  // namespace fdsense
