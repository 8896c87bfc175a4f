#pragma once

namespace fdsense::normal {

/// Standard normal density.
double pdf(double z);

/// Standard normal CDF.
double cdf(double z);

/// Inverse standard normal CDF for p in (0, 1).
///
/// Acklam's rational approximation followed by one Halley correction
/// step against erfc; absolute error in probability space is far below
/// 1e-9 over the whole open interval. Throws DomainError outside (0, 1).
double quantile(double p);

}  // namespace fdsense::normal
