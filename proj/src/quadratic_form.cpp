#include "fdsense/quadratic_form.hpp"

#include <random>

#include "fdsense/errors.hpp"
#include "fdsense/kernels.hpp"

namespace fdsense {

namespace {

constexpr Eigen::Index kDenseEigenLimit = 64;

template <class Feature>
QuadraticObjective from_features(std::size_t m, std::size_t d_theta, std::size_t d_lambda, Feature&& feature,
                                 std::string layout) {
  auto guarded = [&feature](std::size_t i, Matrix& jac, Vector& resid) {
    try {
      feature(i, jac, resid);
    } catch (const ContractError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError("quadratic form: evaluation failed at sample row " + std::to_string(i) + ": " + e.what());
    }
    if (!jac.allFinite() || !resid.allFinite()) {
      throw EvaluationError("quadratic form: non-finite intermediate at sample row " + std::to_string(i));
    }
  };
  kernels::GramSums g = kernels::parallel::gram(m, d_theta, d_lambda, guarded);
  const double inv_m = 1.0 / static_cast<double>(m);
  Matrix a = g.jtj * inv_m;
  a = 0.5 * (a + a.transpose()).eval();
  Vector b = -2.0 * inv_m * g.jtr;
  const double c = g.rtr * inv_m;
  return QuadraticObjective(std::move(a), std::move(b), c, std::move(layout));
}

std::string prior_layout(const ExpFamilyPrior& prior) {
  std::string s;
  for (const auto& blk : prior.blocks()) {
    if (!s.empty()) s += ", ";
    s += blk.name + "[" + std::to_string(blk.lambda_offset) + ":" + std::to_string(blk.lambda_offset + blk.lambda_size) +
         ")";
  }
  return s;
}

void require_loss_tables(const std::vector<PrecomputedScores>& loss_grads, std::size_t m, std::size_t d) {
  if (loss_grads.empty()) throw ContractError("at least one loss-gradient matrix is required");
  for (const auto& t : loss_grads) {
    if (t.rows() != m || t.dim() != d) {
      throw ContractError("loss-gradient matrix '" + t.label() + "' is " + std::to_string(t.rows()) + " x " +
                          std::to_string(t.dim()) + ", expected " + std::to_string(m) + " x " + std::to_string(d));
    }
  }
}

/// Extreme Ritz values from a Lanczos run with full reorthogonalisation and a
/// seeded random start vector.
std::pair<double, double> lanczos_extremes(const Matrix& a, std::uint64_t seed) {
  const Eigen::Index n = a.rows();
  const Eigen::Index steps = std::min<Eigen::Index>(n, 160);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix q(n, steps);
  Vector alpha(steps);
  Vector beta(steps);
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = n01(rng);
  q.col(0) = v.normalized();
  Eigen::Index used = steps;
  for (Eigen::Index j = 0; j < steps; ++j) {
    Vector w = a * q.col(j);
    alpha[j] = q.col(j).dot(w);
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    beta[j] = w.norm();
    if (j + 1 == steps) break;
    if (beta[j] <= 1e-14 * std::max(1.0, std::abs(alpha[j]))) {
      used = j + 1;
      break;
    }
    q.col(j + 1) = w / beta[j];
  }
  Matrix t = Matrix::Zero(used, used);
  for (Eigen::Index j = 0; j < used; ++j) {
    t(j, j) = alpha[j];
    if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(t, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace

QuadraticObjective::QuadraticObjective(Matrix a, Vector b, double c, std::string layout)
    : a_(std::move(a)), b_(std::move(b)), c_(c), layout_(std::move(layout)) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size()) throw ContractError("quadratic objective shapes disagree");
  if (!a_.allFinite() || !b_.allFinite() || !std::isfinite(c_)) {
    throw EvaluationError("quadratic objective has non-finite coefficients");
  }
}

double QuadraticObjective::min_eigenvalue() const {
  if (a_.size() == 0) return 0.0;
  if (a_.rows() <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  return lanczos_extremes(a_, 0x5eed).first;
}

double QuadraticObjective::max_eigenvalue() const {
  if (a_.size() == 0) return 0.0;
  if (a_.rows() <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  return lanczos_extremes(a_, 0x5eed).second;
}

double QuadraticObjective::psd_margin() const {
  const double lo = min_eigenvalue();
  const double norm = std::max(std::abs(lo), std::abs(max_eigenvalue()));
  return norm > 0.0 ? lo / norm : 0.0;
}

Vector QuadraticObjective::gradient(const Vector& lambda) const {
  if (lambda.size() != b_.size()) throw ContractError("hyperparameter has the wrong length");
  return 2.0 * (a_ * lambda) + b_;
}

QuadraticObjective QuadraticObjective::sub_block(std::size_t offset, std::size_t size, double c) const {
  if (offset + size > dim()) throw ContractError("sub-block exceeds the objective dimension");
  const auto o = static_cast<Eigen::Index>(offset);
  const auto s = static_cast<Eigen::Index>(size);
  return QuadraticObjective(a_.block(o, o, s, s), b_.segment(o, s), c,
                            "block[" + std::to_string(offset) + ":" + std::to_string(offset + size) + ")");
}

double evaluate(const QuadraticObjective& q, const Vector& lambda) {
  if (static_cast<std::size_t>(lambda.size()) != q.dim()) {
    throw ContractError("hyperparameter has length " + std::to_string(lambda.size()) + ", objective expects " +
                        std::to_string(q.dim()));
  }
  const double v = lambda.dot(q.a() * lambda) + q.b().dot(lambda) + q.c();
  if (v < 0.0 && v >= -1e-10 * (1.0 + std::abs(q.c()))) return 0.0;
  return v;
}

QuadraticObjective build_joint(const SampleSet& samples, const ExpFamilyPrior& prior, const LinearLoss& loss,
                               const PrecomputedScores& ref_scores) {
  if (prior.dim() != samples.dim() || loss.dim() != samples.dim()) {
    throw ContractError("prior, loss and samples must share the parameter dimension");
  }
  ref_scores.require_aligned(samples);
  const std::size_t d_l = loss.loss_dim();
  const std::size_t d_t = prior.stat_dim();
  const auto& ref = ref_scores.values();
  auto feature = [&](std::size_t i, Matrix& jac, Vector& resid) {
    const ParamPoint theta = samples.row(i);
    jac.leftCols(static_cast<Eigen::Index>(d_l)) = -loss.grad_l(theta).transpose();
    jac.rightCols(static_cast<Eigen::Index>(d_t)) = prior.stat_jacobian(theta).transpose();
    resid = ref.row(static_cast<Eigen::Index>(i)).transpose() - prior.grad_log_base(theta);
  };
  return from_features(samples.size(), samples.dim(), d_l + d_t, feature,
                       "loss[0:" + std::to_string(d_l) + "), prior offset " + std::to_string(d_l) + ": " +
                           prior_layout(prior));
}

QuadraticObjective build_joint(const SampleSet& samples, const ExpFamilyPrior& prior,
                               const std::vector<PrecomputedScores>& loss_grads,
                               const PrecomputedScores& ref_scores) {
  if (prior.dim() != samples.dim()) throw ContractError("prior and samples must share the parameter dimension");
  ref_scores.require_aligned(samples);
  require_loss_tables(loss_grads, samples.size(), samples.dim());
  const std::size_t d_l = loss_grads.size();
  const std::size_t d_t = prior.stat_dim();
  const auto& ref = ref_scores.values();
  auto feature = [&](std::size_t i, Matrix& jac, Vector& resid) {
    const ParamPoint theta = samples.row(i);
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < d_l; ++k) {
      jac.col(static_cast<Eigen::Index>(k)) = -loss_grads[k].values().row(r).transpose();
    }
    jac.rightCols(static_cast<Eigen::Index>(d_t)) = prior.stat_jacobian(theta).transpose();
    resid = ref.row(r).transpose() - prior.grad_log_base(theta);
  };
  return from_features(samples.size(), samples.dim(), d_l + d_t, feature,
                       "loss[0:" + std::to_string(d_l) + "), prior offset " + std::to_string(d_l) + ": " +
                           prior_layout(prior));
}

QuadraticObjective build_prior_only(const SampleSet& samples, const ExpFamilyPrior& prior,
                                    const PrecomputedScores& ref_prior_scores) {
  if (prior.dim() != samples.dim()) throw ContractError("prior and samples must share the parameter dimension");
  ref_prior_scores.require_aligned(samples);
  const std::vector<std::size_t> coords = prior.coords();
  const auto& ref = ref_prior_scores.values();
  auto feature = [&](std::size_t i, Matrix& jac, Vector& resid) {
    const ParamPoint theta = samples.row(i);
    jac = prior.stat_jacobian(theta).transpose();
    const Vector full = ref.row(static_cast<Eigen::Index>(i)).transpose() - prior.grad_log_base(theta);
    resid.setZero();
    for (auto k : coords) resid[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(k)];
  };
  return from_features(samples.size(), samples.dim(), prior.stat_dim(), feature, prior_layout(prior));
}

QuadraticObjective build_loss_only(const SampleSet& samples, const LinearLoss& loss, const Vector& lambda_ref) {
  if (loss.dim() != samples.dim()) throw ContractError("loss and samples must share the parameter dimension");
  if (static_cast<std::size_t>(lambda_ref.size()) != loss.loss_dim()) {
    throw ContractError("lambda_ref has length " + std::to_string(lambda_ref.size()) + ", expected " +
                        std::to_string(loss.loss_dim()));
  }
  auto feature = [&](std::size_t i, Matrix& jac, Vector& resid) {
    jac = loss.grad_l(samples.row(i)).transpose();
    resid.setZero();
  };
  QuadraticObjective q = from_features(samples.size(), samples.dim(), loss.loss_dim(), feature, "loss");
  const Matrix& a = q.a();
  return QuadraticObjective(a, -2.0 * (a * lambda_ref), lambda_ref.dot(a * lambda_ref), "loss");
}

QuadraticObjective build_loss_only(const std::vector<PrecomputedScores>& loss_grads, const Vector& lambda_ref) {
  if (loss_grads.empty()) throw ContractError("at least one loss-gradient matrix is required");
  const std::size_t m = loss_grads.front().rows();
  const std::size_t d = loss_grads.front().dim();
  require_loss_tables(loss_grads, m, d);
  if (static_cast<std::size_t>(lambda_ref.size()) != loss_grads.size()) {
    throw ContractError("lambda_ref has length " + std::to_string(lambda_ref.size()) + ", expected " +
                        std::to_string(loss_grads.size()));
  }
  auto feature = [&](std::size_t i, Matrix& jac, Vector& resid) {
    for (std::size_t k = 0; k < loss_grads.size(); ++k) {
      jac.col(static_cast<Eigen::Index>(k)) = loss_grads[k].values().row(static_cast<Eigen::Index>(i)).transpose();
    }
    resid.setZero();
  };
  QuadraticObjective q = from_features(m, d, loss_grads.size(), feature, "loss");
  const Matrix& a = q.a();
  return QuadraticObjective(a, -2.0 * (a * lambda_ref), lambda_ref.dot(a * lambda_ref), "loss");
}

}  // namespace fdsense
