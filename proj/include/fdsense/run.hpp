#pragma once

#include <cstdint>
#include <string>

#include "fdsense/config.hpp"
#include "fdsense/errors.hpp"
#include "fdsense/gaussian_analytics.hpp"
#include "fdsense/neighborhoods.hpp"
#include "fdsense/report.hpp"

namespace fdsense {

/// Runs f, prefixing any library error with `key` while keeping its type.
template <class F>
auto in_context(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ContractError& e) {
    throw ContractError(key + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(key + ": " + e.what());
  } catch (const EvaluationError& e) {
    throw EvaluationError(key + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(key + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(key + ": " + e.what());
  }
}

/// Report view of an optimisation result; block shares are each block's
/// sensitivity over the total.
ReportResults report_results(const SensitivityResult& r);

/// Dispatches on cfg.mode. Deterministic for a fixed config and input files.
SensitivityReport run(const RunConfig& cfg);

/// The one-dimensional Gaussian location study: x_1..x_n ~ N(theta_true,
/// sigma_l^2), reference prior N(mu_ref, sigma_ref^2), m exact draws from the
/// conjugate reference posterior, and a Gaussian prior family perturbed in
/// natural parameters (lambda_0, lambda_1) = (mu/s^2, -1/(2 s^2)).
struct GaussianDemoSetup {
  std::size_t n = 100;
  double theta_true = 3.0;
  double sigma_l = 2.0;
  double mu_ref = 2.0;
  double sigma_ref = 4.0;
  std::size_t m = 2000;
  std::uint64_t seed = 20240601;
};

struct GaussianDemo {
  GaussianDemoSetup setup;
  double xbar = 0.0;
  GaussianDist reference_posterior;
  SampleSet samples;
  PrecomputedScores reference_prior_scores;
  PrecomputedScores reference_posterior_scores;
  ExpFamilyPrior family;
  QuadraticObjective objective;
  /// Natural-parameter polytope with vertices (-2.5, -0.125), (-0.4, -0.02),
  /// (2.5, -0.125), (0.4, 0.02).
  PolytopeNeighborhood gamma;
};

GaussianDemo make_gaussian_demo(const GaussianDemoSetup& setup);

/// Candidate posterior scores when only the prior changes:
/// s_ref_post - s_ref_prior + s_prior(lambda).
PrecomputedScores prior_swap_scores(const SampleSet& samples, const PrecomputedScores& ref_posterior,
                                    const PrecomputedScores& ref_prior, const ExpFamilyPrior& candidate);

}  // namespace fdsense
