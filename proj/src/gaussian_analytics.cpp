#include "fdsense/gaussian_analytics.hpp"

#include "fdsense/errors.hpp"

namespace fdsense {

namespace {

void require_same_dim(const GaussianDist& p, const GaussianDist& q) {
  if (p.dim() != q.dim()) {
    throw ContractError("Gaussians have dimensions " + std::to_string(p.dim()) + " and " + std::to_string(q.dim()));
  }
}

double log_det_spd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

GaussianDist::GaussianDist(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size()) throw ContractError("mean and covariance dimensions differ");
  require_spd(cov_, "covariance");
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  precision_ = cov_.llt().solve(Matrix::Identity(cov_.rows(), cov_.cols()));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

GaussianDist conjugate_posterior(const Vector& lambda0, const Matrix& lambda1, const Matrix& lik_cov,
                                 const Vector& xbar, std::size_t n) {
  const Eigen::Index d = lambda0.size();
  if (lambda1.rows() != d || lambda1.cols() != d || lik_cov.rows() != d || lik_cov.cols() != d || xbar.size() != d) {
    throw ContractError("conjugate update inputs have inconsistent dimensions");
  }
  require_spd(lik_cov, "likelihood covariance");
  const Matrix lik_precision = lik_cov.llt().solve(Matrix::Identity(d, d));
  const auto nn = static_cast<double>(n);
  Matrix precision = -2.0 * lambda1 + nn * lik_precision;
  precision = 0.5 * (precision + precision.transpose()).eval();
  require_spd(precision, "posterior precision");
  Matrix cov = precision.llt().solve(Matrix::Identity(d, d));
  Vector mean = cov * (lambda0 + nn * (lik_precision * xbar));
  return GaussianDist(std::move(mean), std::move(cov));
}

double fd_gaussian(const GaussianDist& p, const GaussianDist& q) {
  require_same_dim(p, q);
  const Vector shift = q.precision() * (q.mean() - p.mean());
  const Matrix dp = q.precision() - p.precision();
  return shift.squaredNorm() + (dp * dp * p.cov()).trace();
}

double kl_gaussian(const GaussianDist& p, const GaussianDist& q) {
  require_same_dim(p, q);
  const Vector dm = q.mean() - p.mean();
  const double d = static_cast<double>(p.dim());
  const double v = 0.5 * ((q.precision() * p.cov()).trace() + dm.dot(q.precision() * dm) - d + log_det_spd(q.cov()) -
                          log_det_spd(p.cov()));
  return std::max(v, 0.0);
}

double w2_gaussian(const GaussianDist& p, const GaussianDist& q) {
  require_same_dim(p, q);
  const Matrix root_q = symmetric_sqrt(q.cov());
  Matrix inner = root_q * p.cov() * root_q;
  inner = 0.5 * (inner + inner.transpose()).eval();
  const double sq = (p.mean() - q.mean()).squaredNorm() + (p.cov() + q.cov() - 2.0 * symmetric_sqrt(inner)).trace();
  return std::sqrt(std::max(sq, 0.0));
}

ScoreField gaussian_score_field(const GaussianDist& g) {
  return ScoreField(g.dim(), [mean = g.mean(), precision = g.precision()](const ParamPoint& theta) -> Vector {
    return -(precision * (theta - mean));
  });
}

}  // namespace fdsense
