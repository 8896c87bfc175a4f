#include <doctest.h>

#include <cmath>
#include <random>

#include "fdsense/errors.hpp"
#include "fdsense/model_scores.hpp"
#include "oracles.hpp"

using namespace fdsense;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

ScoreField neg_identity(std::size_t d) {
  return ScoreField(d, [](const ParamPoint& t) -> Vector { return -t; });
}

/// lambda^T T(theta) + log g(theta) for the 1-d inverse-gamma family written
/// out by hand: -(a+1) log s - b/s.
double log_invgamma(double s, double a, double b) { return -(a + 1.0) * std::log(s) - b / s; }

/// Log Gaussian copula density with z computed by the test-side quantile.
double log_copula(double rho, double u, double v) {
  const auto zu = static_cast<double>(oracle::normal_quantile_bisect(u));
  const auto zv = static_cast<double>(oracle::normal_quantile_bisect(v));
  const double r2 = 1.0 - rho * rho;
  return -0.5 * std::log(r2) - (rho * rho * (zu * zu + zv * zv) - 2.0 * rho * zu * zv) / (2.0 * r2);
}

}  // namespace

TEST_CASE("sample sets validate shape, finiteness and chain ids") {
  CHECK_THROWS_AS(SampleSet(RowMatrix(0, 2)), ContractError);
  RowMatrix bad(2, 1);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(SampleSet{bad}, ContractError);
  RowMatrix ok(3, 1);
  ok << 1, 2, 3;
  CHECK_THROWS_AS(SampleSet(ok, SampleOrigin::mcmc, std::vector<int>{0, 0}), ContractError);
  const SampleSet s(ok, SampleOrigin::mcmc, std::vector<int>{0, 0, 1});
  CHECK(s.size() == 3);
  CHECK(s.dim() == 1);
}

TEST_CASE("posterior score examples") {
  const ScoreField zero1 = ScoreField::zero(1);
  CHECK(posterior_score(neg_identity(1), zero1, vec({2.0}))[0] == -2.0);

  const ScoreField identity2(2, [](const ParamPoint& t) -> Vector { return t; });
  const Vector s = posterior_score(ScoreField::zero(2), identity2, vec({1.0, -1.0}));
  CHECK(s[0] == -1.0);
  CHECK(s[1] == 1.0);

  // N(0,1) prior, one observation x = 0 with sigma_l = 1: grad L(theta) = theta - x.
  const ScoreField loss(1, [](const ParamPoint& t) -> Vector { return t; });
  const double got = posterior_score(neg_identity(1), loss, vec({1.0}))[0];
  auto log_post = [](const Vector& t) { return -0.5 * t[0] * t[0] - 0.5 * (0.0 - t[0]) * (0.0 - t[0]); };
  CHECK(got == doctest::Approx(oracle::fd_gradient(log_post, vec({1.0}))[0]).epsilon(1e-8));
  CHECK(got == doctest::Approx(-2.0));

  CHECK_THROWS_AS(posterior_score(ScoreField::zero(2), ScoreField::zero(1), vec({1.0, 2.0})), ContractError);
}

TEST_CASE("posterior score with a zero component reduces to the other") {
  std::mt19937_64 rng(7);
  const ScoreField prior(3, [](const ParamPoint& t) -> Vector { return -t.array().sinh().matrix(); });
  const ScoreField loss(3, [](const ParamPoint& t) -> Vector { return t.array().cube().matrix(); });
  for (int k = 0; k < 10; ++k) {
    const Vector t = oracle::random_vector(rng, 3);
    CHECK((posterior_score(prior, ScoreField::zero(3), t) - prior(t)).norm() == 0.0);
    CHECK((posterior_score(ScoreField::zero(3), loss, t) + loss(t)).norm() == 0.0);
  }
}

TEST_CASE("exponential-family prior score examples") {
  const ExpFamilyPrior std_normal = gaussian_family(1, {0}, vec({0.0, -0.5}));
  CHECK(expfam_prior_score(std_normal, vec({3.0}))[0] == doctest::Approx(-3.0).epsilon(1e-15));
  auto log_density = [](const Vector& t) { return -0.5 * t[0] * t[0]; };
  CHECK(expfam_prior_score(std_normal, vec({3.0}))[0] ==
        doctest::Approx(oracle::fd_gradient(log_density, vec({3.0}))[0]).epsilon(1e-8));

  const ExpFamilyPrior flat = gaussian_family(2, {0, 1}, Vector::Zero(6));
  CHECK(expfam_prior_score(flat, vec({0.3, -7.0})).norm() == 0.0);

  const ExpFamilyPrior ig = inverse_gamma_family(1, 0, invgamma_natural_from_shape_rate(2.0, 1.0));
  const double s = expfam_prior_score(ig, vec({1.0}))[0];
  CHECK(s == doctest::Approx(-2.0).epsilon(1e-15));
  auto log_ig = [](const Vector& t) { return log_invgamma(t[0], 2.0, 1.0); };
  CHECK(s == doctest::Approx(oracle::fd_gradient(log_ig, vec({1.0}))[0]).epsilon(1e-7));

  CHECK_THROWS_AS(expfam_prior_score(ig, vec({-1.0})), DomainError);
}

TEST_CASE("sufficient-statistic Jacobians agree with finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.5, 3.0);
  const ExpFamilyPrior g = gaussian_family(4, {0, 2, 3}, oracle::random_vector(rng, 12));
  const ExpFamilyPrior ig = inverse_gamma_family(4, 1, invgamma_natural_from_shape_rate(3.0, 2.0));
  const ExpFamilyPrior prod = product_family({g, ig});
  for (int rep = 0; rep < 20; ++rep) {
    Vector t = oracle::random_vector(rng, 4);
    t[1] = pos(rng);
    const Matrix j = prod.stat_jacobian(t);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(prod.stat_dim()); ++k) {
      auto tk = [&](const Vector& x) { return prod.stat(x)[k]; };
      const Vector fd = oracle::fd_gradient(tk, t);
      CHECK((j.row(k).transpose() - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
    // score = grad of lambda^T T + log g
    auto logp = [&](const Vector& x) { return prod.lambda().dot(prod.stat(x)); };
    const Vector fd = oracle::fd_gradient(logp, t);
    CHECK((expfam_prior_score(prod, t) - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("product family concatenates parameters and rejects overlap") {
  const ExpFamilyPrior a = gaussian_family(3, {0}, vec({1.0, -0.5}));
  const ExpFamilyPrior b = inverse_gamma_family(3, 2, vec({-3.0, -1.0}));
  const ExpFamilyPrior p = product_family({a, b});
  CHECK(p.stat_dim() == 4);
  CHECK(p.lambda() == vec({1.0, -0.5, -3.0, -1.0}));
  REQUIRE(p.blocks().size() == 2);
  CHECK(p.blocks()[1].lambda_offset == 2);
  CHECK(p.coords() == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(product_family({a, gaussian_family(3, {0, 1}, Vector::Zero(6))}), ContractError);
}

TEST_CASE("Gaussian natural parameter maps") {
  Vector n = gaussian_natural_from_moment(vec({2.0}), Matrix::Constant(1, 1, 16.0));
  CHECK(n[0] == 0.125);
  CHECK(n[1] == -0.03125);

  n = gaussian_natural_from_moment(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(n == vec({0.0, 0.0, -0.5, -0.0, -0.0, -0.5}));

  n = gaussian_natural_from_moment(vec({-10.0}), Matrix::Constant(1, 1, 4.0));
  CHECK(n[0] == -2.5);
  CHECK(n[1] == -0.125);

  GaussianMoments m = gaussian_moment_from_natural(vec({-2.5, -0.125}));
  CHECK(m.mean[0] == doctest::Approx(-10.0).epsilon(1e-15));
  CHECK(m.cov(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  m = gaussian_moment_from_natural(vec({0.0}), Matrix::Constant(1, 1, -0.5));
  CHECK(m.mean[0] == 0.0);
  CHECK(m.cov(0, 0) == 1.0);

  CHECK_THROWS_AS(gaussian_natural_from_moment(vec({0.0}), Matrix::Constant(1, 1, -1.0)), DomainError);
  CHECK_THROWS_AS(gaussian_moment_from_natural(vec({0.4, 0.02})), DomainError);
}

TEST_CASE("Gaussian natural/moment round trip up to dimension 10") {
  std::mt19937_64 rng(3);
  for (Eigen::Index d = 1; d <= 10; ++d) {
    const Matrix cov = oracle::random_spd(rng, d, 5.0);
    const Vector mean = oracle::random_vector(rng, d);
    const Vector nat = gaussian_natural_from_moment(mean, cov);
    const GaussianMoments back = gaussian_moment_from_natural(nat);
    CHECK((back.mean - mean).norm() <= 1e-12 * std::max(1.0, mean.norm()) * 10);
    CHECK((back.cov - cov).norm() <= 1e-12 * cov.norm() * 10);
    // Oracle: direct algebra.
    const Matrix prec = cov.inverse();
    CHECK((nat.head(d) - prec * mean).norm() <= 1e-12 * 10 * std::max(1.0, (prec * mean).norm()));
  }
}

TEST_CASE("inverse-gamma natural parameter maps") {
  Vector n = invgamma_natural_from_shape_rate(2.5, 1.0 / 6.0);
  CHECK(n[0] == -3.5);
  CHECK(n[1] == -1.0 / 6.0);
  n = invgamma_natural_from_shape_rate(7.0, 2.0);
  CHECK(n == vec({-8.0, -2.0}));
  CHECK(invgamma_natural_from_shape_rate(1.0, 1.0) == vec({-2.0, -1.0}));
  CHECK_THROWS_AS(invgamma_natural_from_shape_rate(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(invgamma_natural_from_shape_rate(1.0, -1.0), DomainError);
  const auto [a, b] = invgamma_shape_rate_from_natural(vec({-8.0, -2.0}));
  CHECK(a == 7.0);
  CHECK(b == 2.0);
}

TEST_CASE("half-Cauchy score") {
  const ScoreField hc = half_cauchy_score(2, 1, 1.0);
  const Vector s = hc(vec({5.0, 2.0}));
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(-4.0 / 5.0));
  auto logp = [](const Vector& t) { return -std::log(1.0 + t[0] * t[0]); };
  CHECK(half_cauchy_score(1, 0)(vec({0.7}))[0] == doctest::Approx(oracle::fd_gradient(logp, vec({0.7}))[0]).epsilon(1e-8));
  CHECK_THROWS_AS(hc(vec({0.0, -1.0})), DomainError);
}

TEST_CASE("copula score examples") {
  const Vector zero = copula_score({0.0, 0, 1}, vec({0.3, 0.9}));
  CHECK(zero.norm() == 0.0);
  CHECK(copula_score({0.5, 0, 1}, vec({0.5, 0.5})).norm() == 0.0);

  const double u = 0.8413447460685429;  // Phi(1)
  const Vector s = copula_score({0.2, 0, 1}, vec({u, 0.5}));
  const double phi1 = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
  const double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
  CHECK(s[0] == doctest::Approx(-0.04 / (0.96 * phi1)).epsilon(1e-9));
  CHECK(s[1] == doctest::Approx(0.2 / (0.96 * phi0)).epsilon(1e-9));

  const double h = 1e-6;
  const double du = (log_copula(0.2, u + h, 0.5) - log_copula(0.2, u - h, 0.5)) / (2 * h);
  const double dv = (log_copula(0.2, u, 0.5 + h) - log_copula(0.2, u, 0.5 - h)) / (2 * h);
  CHECK(s[0] == doctest::Approx(du).epsilon(1e-6));
  CHECK(s[1] == doctest::Approx(dv).epsilon(1e-6));

  CHECK_THROWS_AS(copula_score({0.2, 0, 1}, vec({0.0, 0.5})), DomainError);
  CHECK_THROWS_AS(copula_score({0.2, 0, 1}, vec({0.5, 1.0})), DomainError);
  CHECK_THROWS_AS(copula_score({1.0, 0, 1}, vec({0.5, 0.5})), DomainError);
  CHECK_THROWS_AS(copula_score({0.2, 0, 0}, vec({0.5, 0.5})), ContractError);
}

TEST_CASE("copula score components exchange when the pair is swapped") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int k = 0; k < 50; ++k) {
    const double a = u(rng);
    const double b = u(rng);
    const Vector s = copula_score({0.37, 0, 1}, vec({a, b}));
    const Vector t = copula_score({0.37, 0, 1}, vec({b, a}));
    CHECK(s[0] == doctest::Approx(t[1]).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(t[0]).epsilon(1e-14));
  }
}

TEST_CASE("scores evaluated over samples") {
  RowMatrix draws(2, 1);
  draws << 1.0, 2.0;
  const SampleSet s(draws);
  const PrecomputedScores z = eval_scores_over_samples(ScoreField::zero(1), s);
  CHECK(z.values().norm() == 0.0);
  const PrecomputedScores n = eval_scores_over_samples(neg_identity(1), s);
  CHECK(n.values()(0, 0) == -1.0);
  CHECK(n.values()(1, 0) == -2.0);

  std::mt19937_64 rng(9);
  const SampleSet gs(oracle::random_rows(rng, 100, 1));
  const ExpFamilyPrior prior = gaussian_family(1, {0}, gaussian_natural_from_moment(vec({1.0}), Matrix::Constant(1, 1, 2.0)));
  const PrecomputedScores ps = eval_scores_over_samples(prior.score_field(), gs);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    auto logp = [](const Vector& t) { return -(t[0] - 1.0) * (t[0] - 1.0) / 4.0; };
    CHECK(ps.values()(static_cast<Eigen::Index>(i), 0) ==
          doctest::Approx(oracle::fd_gradient(logp, gs.row(i))[0]).epsilon(1e-6));
  }
}

TEST_CASE("a non-finite row is reported by index") {
  RowMatrix draws(4, 1);
  draws << 1.0, 0.0, 2.0, 0.0;
  const ScoreField inv(1, [](const ParamPoint& t) -> Vector { return Vector::Constant(1, 1.0 / t[0]); });
  try {
    eval_scores_over_samples(inv, SampleSet(draws));
    FAIL("expected an EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}
