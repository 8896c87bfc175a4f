#include "fdsense/model_scores.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fdsense/errors.hpp"
#include "fdsense/kernels.hpp"
#include "fdsense/normal.hpp"

namespace fdsense {

namespace {

std::string describe(const ParamPoint& theta) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index k = 0; k < theta.size(); ++k) os << (k ? ", " : "") << theta[k];
  os << ')';
  return os.str();
}

void require_finite_rows(const RowMatrix& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (!std::isfinite(m(i, k))) {
        throw ContractError(what + ": non-finite entry at row " + std::to_string(i) + ", column " +
                            std::to_string(k));
      }
    }
  }
}

}  // namespace

SampleSet::SampleSet(RowMatrix draws, SampleOrigin origin, std::optional<std::vector<int>> chain_ids)
    : draws_(std::move(draws)), origin_(origin), chain_ids_(std::move(chain_ids)) {
  if (draws_.rows() < 1 || draws_.cols() < 1) throw ContractError("sample set must have m >= 1 and d >= 1");
  require_finite_rows(draws_, "sample set");
  if (chain_ids_ && chain_ids_->size() != size()) {
    throw ContractError("chain ids have length " + std::to_string(chain_ids_->size()) + ", expected " +
                        std::to_string(size()));
  }
}

PrecomputedScores::PrecomputedScores(RowMatrix values, std::string label)
    : values_(std::move(values)), label_(std::move(label)) {
  require_finite_rows(values_, "scores '" + label_ + "'");
}

void PrecomputedScores::require_aligned(const SampleSet& samples) const {
  if (rows() != samples.size() || dim() != samples.dim()) {
    throw ContractError("scores '" + label_ + "' are " + std::to_string(rows()) + " x " + std::to_string(dim()) +
                        ", samples are " + std::to_string(samples.size()) + " x " + std::to_string(samples.dim()));
  }
}

ScoreField::ScoreField(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {
  if (dim_ == 0) throw ContractError("score field dimension must be >= 1");
}

Vector ScoreField::operator()(const ParamPoint& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_) {
    throw ContractError("score field of dimension " + std::to_string(dim_) + " evaluated at a point of dimension " +
                        std::to_string(theta.size()));
  }
  Vector s = fn_(theta);
  if (static_cast<std::size_t>(s.size()) != dim_) {
    throw ContractError("score field returned " + std::to_string(s.size()) + " entries, expected " +
                        std::to_string(dim_));
  }
  if (!s.allFinite()) throw EvaluationError("non-finite score at theta = " + describe(theta));
  return s;
}

ScoreField ScoreField::zero(std::size_t dim) {
  return ScoreField(dim, [dim](const ParamPoint&) { return Vector::Zero(static_cast<Eigen::Index>(dim)); });
}

ScoreField ScoreField::coordinate(std::size_t dim, std::size_t coord, std::function<double(double)> grad) {
  if (coord >= dim) throw ContractError("coordinate " + std::to_string(coord) + " out of range");
  return ScoreField(dim, [dim, coord, grad = std::move(grad)](const ParamPoint& theta) {
    Vector s = Vector::Zero(static_cast<Eigen::Index>(dim));
    s[static_cast<Eigen::Index>(coord)] = grad(theta[static_cast<Eigen::Index>(coord)]);
    return s;
  });
}

ScoreField operator+(const ScoreField& a, const ScoreField& b) {
  if (a.dim() != b.dim()) throw ContractError("cannot add score fields of different dimension");
  return ScoreField(a.dim(), [a, b](const ParamPoint& theta) -> Vector { return a(theta) + b(theta); });
}

ScoreField operator-(const ScoreField& a, const ScoreField& b) {
  if (a.dim() != b.dim()) throw ContractError("cannot subtract score fields of different dimension");
  return ScoreField(a.dim(), [a, b](const ParamPoint& theta) -> Vector { return a(theta) - b(theta); });
}

ScoreField half_cauchy_score(std::size_t dim, std::size_t coord, double scale) {
  if (!(scale > 0.0)) throw DomainError("half-Cauchy scale must be positive");
  return ScoreField::coordinate(dim, coord, [scale](double s) {
    if (!(s > 0.0)) throw DomainError("half-Cauchy support is s > 0, got " + std::to_string(s));
    return -2.0 * s / (scale * scale + s * s);
  });
}

ExpFamilyPrior::ExpFamilyPrior(std::size_t dim, std::size_t stat_dim, StatFn stat, JacFn stat_jacobian,
                               StatFn grad_log_base, Vector lambda, std::vector<PriorBlock> blocks)
    : dim_(dim),
      stat_dim_(stat_dim),
      stat_(std::move(stat)),
      stat_jacobian_(std::move(stat_jacobian)),
      grad_log_base_(std::move(grad_log_base)),
      lambda_(std::move(lambda)),
      blocks_(std::move(blocks)) {
  if (dim_ == 0 || stat_dim_ == 0) throw ContractError("exponential family needs d_Theta >= 1 and d_T >= 1");
  if (static_cast<std::size_t>(lambda_.size()) != stat_dim_) {
    throw ContractError("natural parameter has length " + std::to_string(lambda_.size()) + ", expected " +
                        std::to_string(stat_dim_));
  }
  if (!lambda_.allFinite()) throw ContractError("natural parameter has non-finite entries");
  if (blocks_.empty()) {
    PriorBlock all{"prior", {}, 0, stat_dim_};
    for (std::size_t k = 0; k < dim_; ++k) all.coords.push_back(k);
    blocks_.push_back(std::move(all));
  }
}

std::vector<std::size_t> ExpFamilyPrior::coords() const {
  std::set<std::size_t> all;
  for (const auto& b : blocks_) all.insert(b.coords.begin(), b.coords.end());
  return {all.begin(), all.end()};
}

void ExpFamilyPrior::check_point(const ParamPoint& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_) {
    throw ContractError("prior of dimension " + std::to_string(dim_) + " evaluated at a point of dimension " +
                        std::to_string(theta.size()));
  }
}

Vector ExpFamilyPrior::stat(const ParamPoint& theta) const {
  check_point(theta);
  return stat_(theta);
}

Matrix ExpFamilyPrior::stat_jacobian(const ParamPoint& theta) const {
  check_point(theta);
  Matrix j = stat_jacobian_(theta);
  if (static_cast<std::size_t>(j.rows()) != stat_dim_ || static_cast<std::size_t>(j.cols()) != dim_) {
    throw ContractError("sufficient-statistic Jacobian has the wrong shape");
  }
  return j;
}

Vector ExpFamilyPrior::grad_log_base(const ParamPoint& theta) const {
  check_point(theta);
  return grad_log_base_(theta);
}

ExpFamilyPrior ExpFamilyPrior::with_lambda(Vector lambda) const {
  ExpFamilyPrior copy = *this;
  if (lambda.size() != lambda_.size()) {
    throw ContractError("natural parameter has length " + std::to_string(lambda.size()) + ", expected " +
                        std::to_string(lambda_.size()));
  }
  copy.lambda_ = std::move(lambda);
  return copy;
}

ScoreField ExpFamilyPrior::score_field() const {
  return ScoreField(dim_, [p = *this](const ParamPoint& theta) { return expfam_prior_score(p, theta); });
}

ExpFamilyPrior gaussian_family(std::size_t dim, std::vector<std::size_t> coords, Vector lambda) {
  if (coords.empty()) throw ContractError("gaussian family needs at least one coordinate");
  for (auto c : coords) {
    if (c >= dim) throw ContractError("gaussian family coordinate " + std::to_string(c) + " out of range");
  }
  const std::size_t k = coords.size();
  const std::size_t stat_dim = k + k * k;
  auto stat = [coords](const ParamPoint& theta) {
    const std::size_t k = coords.size();
    Vector t(static_cast<Eigen::Index>(k + k * k));
    for (std::size_t r = 0; r < k; ++r) t[r] = theta[coords[r]];
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) t[k + r * k + c] = theta[coords[r]] * theta[coords[c]];
    }
    return t;
  };
  auto jac = [coords, dim](const ParamPoint& theta) {
    const std::size_t k = coords.size();
    Matrix j = Matrix::Zero(static_cast<Eigen::Index>(k + k * k), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < k; ++r) j(r, coords[r]) = 1.0;
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        const auto row = static_cast<Eigen::Index>(k + r * k + c);
        j(row, coords[r]) += theta[coords[c]];
        j(row, coords[c]) += theta[coords[r]];
      }
    }
    return j;
  };
  auto base = [dim](const ParamPoint&) { return Vector::Zero(static_cast<Eigen::Index>(dim)); };
  std::vector<PriorBlock> blocks{PriorBlock{"gaussian", coords, 0, stat_dim}};
  return ExpFamilyPrior(dim, stat_dim, stat, jac, base, std::move(lambda), std::move(blocks));
}

ExpFamilyPrior inverse_gamma_family(std::size_t dim, std::size_t coord, Vector lambda) {
  if (coord >= dim) throw ContractError("inverse-gamma coordinate " + std::to_string(coord) + " out of range");
  auto positive = [coord](const ParamPoint& theta) {
    const double s = theta[static_cast<Eigen::Index>(coord)];
    if (!(s > 0.0)) throw DomainError("inverse-gamma support is s > 0, got " + std::to_string(s));
    return s;
  };
  auto stat = [positive](const ParamPoint& theta) {
    const double s = positive(theta);
    return Vector{{std::log(s), 1.0 / s}};
  };
  auto jac = [positive, coord, dim](const ParamPoint& theta) {
    const double s = positive(theta);
    Matrix j = Matrix::Zero(2, static_cast<Eigen::Index>(dim));
    j(0, coord) = 1.0 / s;
    j(1, coord) = -1.0 / (s * s);
    return j;
  };
  auto base = [dim](const ParamPoint&) { return Vector::Zero(static_cast<Eigen::Index>(dim)); };
  std::vector<PriorBlock> blocks{PriorBlock{"inverse_gamma", {coord}, 0, 2}};
  return ExpFamilyPrior(dim, 2, stat, jac, base, std::move(lambda), std::move(blocks));
}

ExpFamilyPrior product_family(const std::vector<ExpFamilyPrior>& factors) {
  if (factors.empty()) throw ContractError("product family needs at least one factor");
  const std::size_t dim = factors.front().dim();
  std::set<std::size_t> seen;
  std::vector<PriorBlock> blocks;
  std::size_t stat_dim = 0;
  for (const auto& f : factors) {
    if (f.dim() != dim) throw ContractError("product family factors have different parameter dimensions");
    for (const auto& b : f.blocks()) {
      for (auto c : b.coords) {
        if (!seen.insert(c).second) {
          throw ContractError("product family factors overlap on coordinate " + std::to_string(c));
        }
      }
      PriorBlock shifted = b;
      shifted.lambda_offset += stat_dim;
      blocks.push_back(std::move(shifted));
    }
    stat_dim += f.stat_dim();
  }
  Vector lambda(static_cast<Eigen::Index>(stat_dim));
  std::size_t off = 0;
  for (const auto& f : factors) {
    lambda.segment(static_cast<Eigen::Index>(off), f.lambda().size()) = f.lambda();
    off += f.stat_dim();
  }
  auto stat = [factors, stat_dim](const ParamPoint& theta) {
    Vector t(static_cast<Eigen::Index>(stat_dim));
    Eigen::Index off = 0;
    for (const auto& f : factors) {
      t.segment(off, static_cast<Eigen::Index>(f.stat_dim())) = f.stat(theta);
      off += static_cast<Eigen::Index>(f.stat_dim());
    }
    return t;
  };
  auto jac = [factors, stat_dim, dim](const ParamPoint& theta) {
    Matrix j(static_cast<Eigen::Index>(stat_dim), static_cast<Eigen::Index>(dim));
    Eigen::Index off = 0;
    for (const auto& f : factors) {
      j.middleRows(off, static_cast<Eigen::Index>(f.stat_dim())) = f.stat_jacobian(theta);
      off += static_cast<Eigen::Index>(f.stat_dim());
    }
    return j;
  };
  auto base = [factors, dim](const ParamPoint& theta) {
    Vector g = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& f : factors) g += f.grad_log_base(theta);
    return g;
  };
  return ExpFamilyPrior(dim, stat_dim, stat, jac, base, std::move(lambda), std::move(blocks));
}

LinearLoss::LinearLoss(std::size_t dim, std::size_t loss_dim, GradFn grad_l, Vector lambda)
    : dim_(dim), loss_dim_(loss_dim), grad_l_(std::move(grad_l)), lambda_(std::move(lambda)) {
  if (dim_ == 0 || loss_dim_ == 0) throw ContractError("linear loss needs d_Theta >= 1 and d_L >= 1");
  if (static_cast<std::size_t>(lambda_.size()) != loss_dim_) {
    throw ContractError("loss hyperparameter has length " + std::to_string(lambda_.size()) + ", expected " +
                        std::to_string(loss_dim_));
  }
}

Matrix LinearLoss::grad_l(const ParamPoint& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_) throw ContractError("loss evaluated at wrong dimension");
  Matrix g = grad_l_(theta);
  if (static_cast<std::size_t>(g.rows()) != loss_dim_ || static_cast<std::size_t>(g.cols()) != dim_) {
    throw ContractError("loss gradient has the wrong shape");
  }
  if (!g.allFinite()) throw EvaluationError("non-finite loss gradient at theta = " + describe(theta));
  return g;
}

Vector LinearLoss::loss_gradient(const ParamPoint& theta) const { return grad_l(theta).transpose() * lambda_; }

LinearLoss LinearLoss::with_lambda(Vector lambda) const {
  return LinearLoss(dim_, loss_dim_, grad_l_, std::move(lambda));
}

ScoreField LinearLoss::gradient_field() const {
  return ScoreField(dim_, [l = *this](const ParamPoint& theta) { return l.loss_gradient(theta); });
}

Vector posterior_score(const ScoreField& prior, const ScoreField& loss_grad, const ParamPoint& theta) {
  if (prior.dim() != loss_grad.dim()) {
    throw ContractError("prior score has dimension " + std::to_string(prior.dim()) + ", loss gradient has " +
                        std::to_string(loss_grad.dim()));
  }
  return prior(theta) - loss_grad(theta);
}

Vector expfam_prior_score(const ExpFamilyPrior& prior, const ParamPoint& theta) {
  Vector s = prior.stat_jacobian(theta).transpose() * prior.lambda() + prior.grad_log_base(theta);
  if (!s.allFinite()) throw EvaluationError("non-finite prior score at theta = " + describe(theta));
  return s;
}

Vector gaussian_natural_from_moment(const Vector& mean, const Matrix& cov) {
  if (cov.rows() != mean.size()) throw ContractError("mean and covariance dimensions differ");
  require_spd(cov, "covariance");
  const Eigen::Index k = mean.size();
  const Matrix precision = cov.llt().solve(Matrix::Identity(k, k));
  Vector out(k + k * k);
  out.head(k) = precision * mean;
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) out[k + r * k + c] = -0.5 * precision(r, c);
  }
  return out;
}

GaussianMoments gaussian_moment_from_natural(const Vector& lambda0, const Matrix& lambda1) {
  if (lambda1.rows() != lambda0.size() || lambda1.cols() != lambda0.size()) {
    throw ContractError("lambda_0 and Lambda_1 dimensions differ");
  }
  const Matrix precision = -2.0 * lambda1;
  try {
    require_spd(precision, "-2 Lambda_1");
  } catch (const DomainError&) {
    throw DomainError("Lambda_1 is not symmetric negative definite");
  }
  const Eigen::Index k = lambda0.size();
  Matrix cov = precision.llt().solve(Matrix::Identity(k, k));
  cov = 0.5 * (cov + cov.transpose()).eval();
  Vector mean = cov * lambda0;
  return {std::move(mean), std::move(cov)};
}

GaussianMoments gaussian_moment_from_natural(const Vector& flat) {
  const auto s = static_cast<double>(flat.size());
  const auto k = static_cast<Eigen::Index>(std::llround((-1.0 + std::sqrt(1.0 + 4.0 * s)) / 2.0));
  if (k < 1 || k + k * k != flat.size()) {
    throw ContractError("flattened Gaussian natural parameter has invalid length " + std::to_string(flat.size()));
  }
  Matrix lambda1(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) lambda1(r, c) = flat[k + r * k + c];
  }
  return gaussian_moment_from_natural(flat.head(k), lambda1);
}

Vector invgamma_natural_from_shape_rate(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("inverse-gamma shape and rate must be positive, got a = " + std::to_string(shape) +
                      ", b = " + std::to_string(rate));
  }
  return Vector{{-(shape + 1.0), -rate}};
}

std::pair<double, double> invgamma_shape_rate_from_natural(const Vector& lambda) {
  if (lambda.size() != 2) throw ContractError("inverse-gamma natural parameter must have length 2");
  const double a = -lambda[0] - 1.0;
  const double b = -lambda[1];
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("natural parameter outside the inverse-gamma domain");
  return {a, b};
}

Vector copula_score(const GaussianCopulaScore& c, const ParamPoint& theta) {
  const double lam = c.lambda_c;
  if (!(std::abs(lam) < 1.0)) throw DomainError("copula parameter must satisfy |lambda_c| < 1");
  const auto n = static_cast<std::size_t>(theta.size());
  if (c.i == c.j || c.i >= n || c.j >= n) throw ContractError("copula pair indices invalid for this dimension");
  const double ui = theta[static_cast<Eigen::Index>(c.i)];
  const double uj = theta[static_cast<Eigen::Index>(c.j)];
  if (!(ui > 0.0 && ui < 1.0) || !(uj > 0.0 && uj < 1.0)) {
    throw DomainError("copula coordinates must lie in (0, 1), got " + describe(theta));
  }
  const double zi = normal::quantile(ui);
  const double zj = normal::quantile(uj);
  const double denom = 1.0 - lam * lam;
  Vector s = Vector::Zero(theta.size());
  s[static_cast<Eigen::Index>(c.i)] = (lam * zj - lam * lam * zi) / (denom * normal::pdf(zi));
  s[static_cast<Eigen::Index>(c.j)] = (lam * zi - lam * lam * zj) / (denom * normal::pdf(zj));
  return s;
}

ScoreField copula_score_field(const GaussianCopulaScore& c, std::size_t dim) {
  if (c.i == c.j || c.i >= dim || c.j >= dim) throw ContractError("copula pair indices invalid for this dimension");
  if (!(std::abs(c.lambda_c) < 1.0)) throw DomainError("copula parameter must satisfy |lambda_c| < 1");
  return ScoreField(dim, [c](const ParamPoint& theta) { return copula_score(c, theta); });
}

PrecomputedScores eval_scores_over_samples(const ScoreField& field, const SampleSet& samples, std::string label) {
  if (field.dim() != samples.dim()) {
    throw ContractError("score field has dimension " + std::to_string(field.dim()) + ", samples have " +
                        std::to_string(samples.dim()));
  }
  RowMatrix out(samples.draws().rows(), samples.draws().cols());
  kernels::parallel::for_each_index(samples.size(), [&](std::size_t i) {
    try {
      out.row(static_cast<Eigen::Index>(i)) = field(samples.row(i)).transpose();
    } catch (const ContractError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError("score evaluation failed at sample row " + std::to_string(i) + ": " + e.what());
    }
  });
  return PrecomputedScores(std::move(out), std::move(label));
}

}  // namespace fdsense
