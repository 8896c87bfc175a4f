#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <random>

#include "fdsense/errors.hpp"
#include "fdsense/fd_estimation.hpp"
#include "fdsense/gaussian_analytics.hpp"
#include "oracles.hpp"

using namespace fdsense;

namespace {

PrecomputedScores constant_rows(Eigen::Index m, std::initializer_list<double> row, const char* label = "c") {
  RowMatrix v(m, static_cast<Eigen::Index>(row.size()));
  Eigen::Index k = 0;
  for (double x : row) v.col(k++).setConstant(x);
  return PrecomputedScores(v, label);
}

PrecomputedScores zeros(Eigen::Index m, Eigen::Index d) { return PrecomputedScores(RowMatrix::Zero(m, d), "zero"); }

/// Terms with mean 1 and unbiased sample variance exactly `var`.
std::vector<double> with_variance(std::size_t m, double var) {
  const double a = std::sqrt(var * static_cast<double>(m - 1) / static_cast<double>(m));
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 + (i % 2 == 0 ? a : -a);
  return v;
}

}  // namespace

TEST_CASE("estimate_fd examples") {
  std::mt19937_64 rng(1);
  const RowMatrix a = oracle::random_rows(rng, 50, 3);
  CHECK(estimate_fd(PrecomputedScores(a, "a"), PrecomputedScores(a, "b")).value == 0.0);

  for (Eigen::Index m : {1, 7, 5000}) {
    const FdEstimate e = estimate_fd(constant_rows(m, {3.0, 4.0}), zeros(m, 2));
    CHECK(e.value == 25.0);
    CHECK(e.m == static_cast<std::size_t>(m));
  }
  CHECK_THROWS_AS(estimate_fd(zeros(3, 2), zeros(4, 2)), ContractError);
  CHECK_THROWS_AS(estimate_fd(zeros(3, 2), zeros(3, 1)), ContractError);
}

TEST_CASE("estimate_fd on the unit-variance Gaussian pair is near the closed form") {
  std::mt19937_64 rng(42);
  const Eigen::Index m = 100000;
  const RowMatrix theta = oracle::random_rows(rng, m, 1);
  const RowMatrix ref = -theta;
  const RowMatrix cand = -(theta.array() - 1.0).matrix();
  const double truth = fd_gaussian(GaussianDist(Vector::Zero(1), Matrix::Identity(1, 1)),
                                   GaussianDist(Vector::Ones(1), Matrix::Identity(1, 1)));
  CHECK(truth == 1.0);
  const double v = estimate_fd(PrecomputedScores(ref, "r"), PrecomputedScores(cand, "c")).value;
  CHECK(v >= 0.97);
  CHECK(v <= 1.03);
}

TEST_CASE("estimate_fd matches the direct loop and keeps per-sample terms") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const RowMatrix a = oracle::random_rows(rng, 777, 4);
    const RowMatrix b = oracle::random_rows(rng, 777, 4);
    const FdEstimate e = estimate_fd(PrecomputedScores(a, "a"), PrecomputedScores(b, "b"));
    CHECK(e.value == doctest::Approx(oracle::direct_fd(a, b)).epsilon(1e-13));
    REQUIRE(e.per_sample);
    CHECK(e.per_sample->mean() == doctest::Approx(e.value).epsilon(1e-13));
    CHECK(e.value >= 0.0);
  }
}

TEST_CASE("estimate_fd is bitwise independent of the thread count") {
  const int saved = omp_get_max_threads();
  std::mt19937_64 rng(3);
  const PrecomputedScores a(oracle::random_rows(rng, 50000, 3), "a");
  const PrecomputedScores b(oracle::random_rows(rng, 50000, 3), "b");
  omp_set_num_threads(1);
  const double one = estimate_fd(a, b).value;
  for (int t : {2, 5, 8}) {
    omp_set_num_threads(t);
    CHECK(estimate_fd(a, b).value == one);
  }
  omp_set_num_threads(saved);
}

TEST_CASE("decompose_fd examples") {
  std::mt19937_64 rng(4);
  const Eigen::Index m = 200;
  const PrecomputedScores rl(oracle::random_rows(rng, m, 2), "rl");
  const PrecomputedScores cl(oracle::random_rows(rng, m, 2), "cl");
  const PrecomputedScores rp(oracle::random_rows(rng, m, 2), "rp");
  const PrecomputedScores cp(oracle::random_rows(rng, m, 2), "cp");

  FdDecomposition d = decompose_fd(rl, cl, rp, rp);
  CHECK(d.prior_term == 0.0);
  CHECK(d.cross_term() == 0.0);
  CHECK(d.loss_term == doctest::Approx(d.total).epsilon(1e-14));

  d = decompose_fd(rl, rl, rp, cp);
  CHECK(d.loss_term == 0.0);
  CHECK(d.total == doctest::Approx(d.prior_term).epsilon(1e-14));

  d = decompose_fd(constant_rows(m, {1.0, 0.0}), zeros(m, 2), constant_rows(m, {0.0, 1.0}), zeros(m, 2));
  CHECK(d.loss_term == 1.0);
  CHECK(d.prior_term == 1.0);
  CHECK(d.cross_term() == 0.0);
  CHECK(d.total == 2.0);
  // Oracle: the score difference is (prior diff) - (loss diff) = (-1, 1).
  CHECK(d.total == oracle::direct_fd(RowMatrix::Constant(m, 1, -1.0), RowMatrix::Zero(m, 1)) * 2.0);
}

TEST_CASE("decomposition reconstructs the total with the factor-2 cross term") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index m = 100 + rep;
    const RowMatrix rl = oracle::random_rows(rng, m, 3);
    const RowMatrix cl = oracle::random_rows(rng, m, 3);
    const RowMatrix rp = oracle::random_rows(rng, m, 3);
    const RowMatrix cp = oracle::random_rows(rng, m, 3);
    const FdDecomposition d = decompose_fd(PrecomputedScores(rl, "rl"), PrecomputedScores(cl, "cl"),
                                           PrecomputedScores(rp, "rp"), PrecomputedScores(cp, "cp"));
    // Oracle: posterior score = prior score - loss gradient.
    const double direct = oracle::direct_fd(rp - rl, cp - cl);
    CHECK(d.total == doctest::Approx(direct).epsilon(1e-12));
    CHECK(std::abs(d.loss_term + d.prior_term + d.cross_with_factor_2 - d.total) <= 1e-10 * d.total);
    CHECK(d.cross_literal == doctest::Approx(-0.5 * d.cross_with_factor_2).epsilon(1e-12));

    const FdDecomposition u = decompose_fd(PrecomputedScores(rl, "rl"), PrecomputedScores(cl, "cl"),
                                           PrecomputedScores(rp, "rp"), PrecomputedScores(cp, "cp"),
                                           CrossConvention::uncorrected);
    CHECK(u.cross_term() == u.cross_literal);
    CHECK(u.total == d.total);
  }
}

TEST_CASE("per-dimension contributions") {
  Vector parts = per_dimension_fd(constant_rows(10, {1.0, 2.0}), zeros(10, 2), {{0}, {1}});
  CHECK(parts[0] == 1.0);
  CHECK(parts[1] == 4.0);
  CHECK(parts.sum() == 5.0);

  std::mt19937_64 rng(6);
  const PrecomputedScores a(oracle::random_rows(rng, 300, 7), "a");
  const PrecomputedScores b(oracle::random_rows(rng, 300, 7), "b");
  const double total = estimate_fd(a, b).value;
  parts = per_dimension_fd(a, b, {{0, 1, 2, 3, 4, 5, 6}});
  CHECK(parts.size() == 1);
  CHECK(parts[0] == doctest::Approx(total).epsilon(1e-14));

  parts = per_dimension_fd(a, b, {{0}, {1}, {2}, {3}, {4}, {5}, {6}});
  CHECK(std::abs(parts.sum() - total) <= 1e-12 * total);

  CHECK_THROWS_AS(per_dimension_fd(a, b, {{0, 1}, {1, 2, 3, 4, 5, 6}}), ContractError);
  CHECK_THROWS_AS(per_dimension_fd(a, b, {{0, 1}, {2, 3, 4, 5}}), ContractError);
}

TEST_CASE("Chebyshev error bound examples") {
  const std::vector<double> flat(100, 2.5);
  CHECK(chebyshev_error_bound(flat, 0.05).value == 0.0);

  const auto v = with_variance(400, 4.0);
  const ErrorBound b = chebyshev_error_bound(v, 0.1);
  CHECK(b.variance == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(b.value == doctest::Approx(1.0).epsilon(1e-14));

  const double small = chebyshev_error_bound(with_variance(1000, 3.0), 0.2).value;
  const double large = chebyshev_error_bound(with_variance(4000, 3.0), 0.2).value;
  CHECK(large == doctest::Approx(small / 2.0).epsilon(1e-14));

  CHECK_THROWS_AS(chebyshev_error_bound(v, 0.0), ContractError);
  CHECK_THROWS_AS(chebyshev_error_bound(v, 1.0), ContractError);
  CHECK_THROWS_AS(chebyshev_error_bound(std::vector<double>{}, 0.5), ContractError);
}

TEST_CASE("autocorrelation time of an AR(1) series") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const double phi = 0.5;
  std::vector<double> x(200000);
  double prev = 0.0;
  for (auto& v : x) v = prev = phi * prev + n(rng);
  const double tau = integrated_autocorr_time(x);
  CHECK(tau == doctest::Approx((1 + phi) / (1 - phi)).epsilon(0.1));

  std::vector<double> iid(50000);
  for (auto& v : iid) v = n(rng);
  CHECK(integrated_autocorr_time(iid) == doctest::Approx(1.0).epsilon(0.1));

  // MCMC origin inflates the bound by sqrt(tau); chains are handled separately.
  const double plain = chebyshev_error_bound(x, 0.1).value;
  const ErrorBound mc = chebyshev_error_bound(x, 0.1, SampleOrigin::mcmc);
  CHECK(mc.value == doctest::Approx(plain * std::sqrt(mc.autocorr_time)).epsilon(1e-12));

  std::vector<int> ids(x.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i < ids.size() / 2 ? 0 : 1;
  const ErrorBound per_chain = chebyshev_error_bound(x, 0.1, SampleOrigin::mcmc, ids);
  CHECK(per_chain.autocorr_time == doctest::Approx(3.0).epsilon(0.1));
}
