#pragma once

#include "fdsense/model_scores.hpp"

namespace fdsense {

/// Multivariate normal with SPD covariance.
class GaussianDist {
 public:
  GaussianDist(Vector mean, Matrix cov);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& precision() const { return precision_; }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix precision_;
};

/// Posterior of a Gaussian location model with known likelihood covariance
/// and a natural-parameter Gaussian prior (lambda0, Lambda1).
GaussianDist conjugate_posterior(const Vector& lambda0, const Matrix& lambda1, const Matrix& lik_cov,
                                 const Vector& xbar, std::size_t n);

/// FD(p || q) = ||Sq^{-1}(mq - mp)||^2 + tr((Sq^{-1} - Sp^{-1})^2 Sp).
double fd_gaussian(const GaussianDist& p, const GaussianDist& q);
double kl_gaussian(const GaussianDist& p, const GaussianDist& q);
/// 2-Wasserstein distance (not squared).
double w2_gaussian(const GaussianDist& p, const GaussianDist& q);

/// s(theta) = -Sigma^{-1}(theta - mu).
ScoreField gaussian_score_field(const GaussianDist& g);

}  // namespace fdsense
