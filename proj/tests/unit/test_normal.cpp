#include <doctest.h>

#include <cmath>

#include "fdsense/errors.hpp"
#include "fdsense/normal.hpp"
#include "oracles.hpp"

using namespace fdsense;

TEST_CASE("quantile matches a long-double series oracle at reference points") {
  for (double p : {1e-10, 1e-6, 0.001, 0.02425, 0.1, 0.5, 0.8413447460685429, 0.9, 0.999, 1.0 - 1e-7}) {
    const double z = normal::quantile(p);
    const auto z_ref = static_cast<double>(oracle::normal_quantile_bisect(p));
    CAPTURE(p);
    CHECK(std::abs(z - z_ref) <= 1e-9 * std::max(1.0, std::abs(z_ref)));
    CHECK(std::abs(static_cast<double>(oracle::normal_cdf_series(z)) - p) <= 1e-9);
  }
}

TEST_CASE("cdf and pdf agree with the series oracle") {
  for (double x : {-6.0, -2.5, -1.0, 0.0, 0.3, 1.0, 4.0}) {
    CHECK(std::abs(normal::cdf(x) - static_cast<double>(oracle::normal_cdf_series(x))) <= 1e-15);
  }
  CHECK(normal::pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
}

TEST_CASE("quantile is symmetric and rejects probabilities outside (0, 1)") {
  for (double p : {0.01, 0.2, 0.37}) CHECK(normal::quantile(p) == doctest::Approx(-normal::quantile(1.0 - p)).epsilon(1e-12));
  CHECK(normal::quantile(0.5) == 0.0);
  CHECK_THROWS_AS(normal::quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal::quantile(1.0), DomainError);
  CHECK_THROWS_AS(normal::quantile(std::nan("")), DomainError);
}
