#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fdsense/errors.hpp"
#include "fdsense/fd_estimation.hpp"
#include "fdsense/gaussian_analytics.hpp"
#include "oracles.hpp"

using namespace fdsense;

namespace {

GaussianDist n1(double mean, double var) { return GaussianDist(Vector::Constant(1, mean), Matrix::Constant(1, 1, var)); }

RowMatrix draw(std::mt19937_64& rng, const GaussianDist& g, Eigen::Index m) {
  const Matrix l = g.cov().llt().matrixL();
  std::normal_distribution<double> z;
  RowMatrix out(m, static_cast<Eigen::Index>(g.dim()));
  Vector e(static_cast<Eigen::Index>(g.dim()));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < e.size(); ++k) e[k] = z(rng);
    out.row(i) = (g.mean() + l * e).transpose();
  }
  return out;
}

double log_density(const GaussianDist& g, const Vector& x) {
  const Vector r = x - g.mean();
  const double logdet = std::log(g.cov().determinant());
  return -0.5 * (r.dot(g.precision() * r) + logdet + static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi));
}

}  // namespace

TEST_CASE("conjugate posterior") {
  const GaussianDist none = conjugate_posterior(Vector::Constant(1, 0.125), Matrix::Constant(1, 1, -1.0 / 32.0),
                                                Matrix::Constant(1, 1, 4.0), Vector::Constant(1, 7.0), 0);
  CHECK(none.mean()[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(none.cov()(0, 0) == doctest::Approx(16.0).epsilon(1e-15));

  const GaussianDist one = conjugate_posterior(Vector::Zero(1), Matrix::Constant(1, 1, -0.5), Matrix::Identity(1, 1),
                                               Vector::Ones(1), 1);
  CHECK(one.mean()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(one.cov()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

  // mu_ref = 2, sigma_ref = 4, sigma_l = 2, n = 100.
  const GaussianDist demo = conjugate_posterior(Vector::Constant(1, 2.0 / 16.0), Matrix::Constant(1, 1, -1.0 / 32.0),
                                                Matrix::Constant(1, 1, 4.0), Vector::Constant(1, 3.1), 100);
  CHECK(demo.cov()(0, 0) == doctest::Approx(1.0 / (1.0 / 16.0 + 25.0)).epsilon(1e-14));
  CHECK(demo.mean()[0] == doctest::Approx((0.125 + 25.0 * 3.1) / (1.0 / 16.0 + 25.0)).epsilon(1e-14));

  CHECK_THROWS_AS(conjugate_posterior(Vector::Zero(1), Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1),
                                      Vector::Zero(1), 0),
                  DomainError);
  CHECK_THROWS_AS(GaussianDist(Vector::Zero(2), Matrix{{1.0, 2.0}, {2.0, 1.0}}), DomainError);
  CHECK_THROWS_AS(GaussianDist(Vector::Zero(2), Matrix::Identity(3, 3)), ContractError);
}

TEST_CASE("Fisher divergence closed form") {
  CHECK(fd_gaussian(n1(0, 1), n1(0, 1)) == 0.0);
  CHECK(fd_gaussian(n1(0, 1), n1(1, 1)) == 1.0);
  CHECK(fd_gaussian(n1(0, 1), n1(0, 2)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(fd_gaussian(n1(0, 1), GaussianDist(Vector::Zero(2), Matrix::Identity(2, 2))), ContractError);

  std::mt19937_64 rng(11);
  const GaussianDist p = n1(0, 1);
  const RowMatrix x = draw(rng, p, 1000000);
  const RowMatrix sp = -x;
  const RowMatrix sq = -(x.array() - 1.0);
  CHECK(oracle::direct_fd(sp, sq) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("Fisher divergence specialisations") {
  std::mt19937_64 rng(12);
  for (Eigen::Index d = 1; d <= 6; ++d) {
    const Matrix sp = oracle::random_spd(rng, d);
    const Matrix sq = oracle::random_spd(rng, d);
    const Vector mu = oracle::random_vector(rng, d);
    const Matrix gap = sq.inverse() - sp.inverse();
    const double eq_means = fd_gaussian(GaussianDist(mu, sp), GaussianDist(mu, sq));
    CHECK(eq_means == doctest::Approx((gap * gap * sp).trace()).epsilon(1e-10));

    const Vector shift = oracle::random_vector(rng, d);
    const double eq_cov = fd_gaussian(GaussianDist(mu, sq), GaussianDist(mu + shift, sq));
    CHECK(eq_cov == doctest::Approx((sq.inverse() * shift).squaredNorm()).epsilon(1e-10));
    CHECK(fd_gaussian(GaussianDist(mu, sp), GaussianDist(mu, sp)) <= 1e-12);
    CHECK(fd_gaussian(GaussianDist(mu, sp), GaussianDist(mu + 1e-3 * shift, sp)) > 0.0);
  }
}

TEST_CASE("Fisher divergence agrees with Monte Carlo estimates in 1 to 10 dimensions") {
  std::mt19937_64 rng(13);
  for (Eigen::Index d = 1; d <= 10; ++d) {
    const GaussianDist p(oracle::random_vector(rng, d), oracle::random_spd(rng, d, 10.0));
    const GaussianDist q(oracle::random_vector(rng, d), oracle::random_spd(rng, d, 10.0));
    const SampleSet s(draw(rng, p, 100000));
    const PrecomputedScores ref = eval_scores_over_samples(gaussian_score_field(p), s);
    const PrecomputedScores cand = eval_scores_over_samples(gaussian_score_field(q), s);
    const double exact = fd_gaussian(p, q);
    CHECK(estimate_fd(ref, cand).value == doctest::Approx(exact).epsilon(0.05));
    CHECK(oracle::direct_fd(ref.values(), cand.values()) == doctest::Approx(exact).epsilon(0.05));
  }
}

TEST_CASE("Kullback-Leibler closed form") {
  CHECK(kl_gaussian(n1(0, 1), n1(0, 1)) == 0.0);
  CHECK(kl_gaussian(n1(0, 1), n1(1, 1)) == doctest::Approx(0.5).epsilon(1e-15));
  const double e2 = std::exp(2.0);
  CHECK(kl_gaussian(n1(0, 1), n1(0, e2)) == doctest::Approx(0.5 * (1.0 / e2 - 1.0 + 2.0)).epsilon(1e-14));

  std::mt19937_64 rng(14);
  const GaussianDist p(oracle::random_vector(rng, 2), oracle::random_spd(rng, 2));
  const GaussianDist q(oracle::random_vector(rng, 2), oracle::random_spd(rng, 2));
  const RowMatrix x = draw(rng, p, 400000);
  double mc = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector xi = x.row(i).transpose();
    mc += log_density(p, xi) - log_density(q, xi);
  }
  mc /= static_cast<double>(x.rows());
  CHECK(kl_gaussian(p, q) == doctest::Approx(mc).epsilon(0.02));
  CHECK(kl_gaussian(p, q) > 0.0);
  CHECK(kl_gaussian(q, p) > 0.0);
}

TEST_CASE("2-Wasserstein closed form") {
  CHECK(w2_gaussian(n1(0, 1), n1(0, 1)) == 0.0);
  CHECK(w2_gaussian(n1(0, 1), n1(3, 1)) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(w2_gaussian(n1(0, 1), n1(0, 4)) == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(15);
  for (Eigen::Index d = 1; d <= 6; ++d) {
    // Diagonal covariances commute: W2^2 = |dmu|^2 + sum (sqrt a - sqrt b)^2.
    const Vector a = oracle::random_vector(rng, d).array().square() + 0.1;
    const Vector b = oracle::random_vector(rng, d).array().square() + 0.1;
    const Vector m1 = oracle::random_vector(rng, d);
    const Vector m2 = oracle::random_vector(rng, d);
    const double want = std::sqrt((m1 - m2).squaredNorm() + (a.cwiseSqrt() - b.cwiseSqrt()).squaredNorm());
    const GaussianDist p(m1, a.asDiagonal().toDenseMatrix());
    const GaussianDist q(m2, b.asDiagonal().toDenseMatrix());
    CHECK(w2_gaussian(p, q) == doctest::Approx(want).epsilon(1e-12));

    const GaussianDist r(m1, oracle::random_spd(rng, d));
    const GaussianDist s(m2, oracle::random_spd(rng, d));
    CHECK(w2_gaussian(r, s) == doctest::Approx(w2_gaussian(s, r)).epsilon(1e-12));
  }
}

TEST_CASE("Gaussian score field") {
  CHECK(gaussian_score_field(n1(0, 1))(Vector::Constant(1, 2.0))[0] == -2.0);
  std::mt19937_64 rng(16);
  const GaussianDist g(oracle::random_vector(rng, 4), oracle::random_spd(rng, 4));
  CHECK(gaussian_score_field(g)(g.mean()).norm() == 0.0);
  const Vector x = oracle::random_vector(rng, 4);
  const Vector fd = oracle::fd_gradient([&](const Vector& t) { return log_density(g, t); }, x);
  CHECK((gaussian_score_field(g)(x) - fd).cwiseAbs().maxCoeff() <= 1e-6);
}
