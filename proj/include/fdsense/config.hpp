#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdsense/fd_estimation.hpp"
#include "fdsense/linalg.hpp"

namespace fdsense {

enum class RunMode { estimate, sensitivity, local, gaussian_demo, decompose };

RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode mode);

/// One factor of the exponential-family prior being perturbed.
struct PriorFactorSpec {
  std::string family;  // "gaussian" or "inverse_gamma"
  std::vector<std::size_t> coords;
};

/// One additive term of the reference prior score.
struct ReferencePriorSpec {
  std::string kind;  // "gaussian", "half_cauchy" or "inverse_gamma"
  std::vector<std::size_t> coords;
  Vector mean;
  Matrix cov;
  double scale = 1.0;
  double shape = 0.0;
  double rate = 0.0;
};

struct ModelSpec {
  std::string kind = "precomputed";  // precomputed, expfam_prior, joint, learning_rate, copula
  std::vector<PriorFactorSpec> prior;
  std::vector<ReferencePriorSpec> reference_prior;
  std::optional<Vector> lambda_ref;
  std::optional<Vector> lambda;
  std::optional<Vector> direction;
  std::size_t pair_i = 0;
  std::size_t pair_j = 1;
  std::vector<double> candidates;
};

struct NeighbourhoodSpec {
  std::string type;  // box, ball, interval, vertices, blocks
  Vector lower;
  Vector upper;
  Matrix vertices;
  struct Block {
    std::string id;
    Vector lower;
    Vector upper;
  };
  std::vector<Block> blocks;
};

struct RunOptions {
  std::uint64_t seed = 20240601;
  std::size_t grid_n = 512;
  std::size_t max_iter = 100000;
  double tol = 1e-13;
  std::size_t vertex_limit = 20;
  std::optional<double> delta;
  bool separable = false;
  CrossConvention cross_convention = CrossConvention::with_factor_2;
  std::size_t curve_points = 0;
  std::vector<std::vector<std::size_t>> per_dimension;
};

struct RunConfig {
  RunMode mode = RunMode::estimate;
  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir;
  std::optional<std::filesystem::path> samples_path;
  SampleOrigin origin = SampleOrigin::iid;
  /// Named score files: reference_posterior, candidate_posterior,
  /// reference_prior, candidate_prior, reference_loss_grad, candidate_loss_grad.
  std::map<std::string, std::filesystem::path> scores;
  /// One m x d_Theta matrix per loss component.
  std::vector<std::filesystem::path> loss_basis;
  ModelSpec model;
  std::optional<NeighbourhoodSpec> neighbourhood;
  RunOptions options;
};

/// Parses a config document. Unknown keys, wrong types and missing files are
/// InputErrors whose message starts with the offending key path.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir, RunMode mode);
RunConfig load_config(const std::filesystem::path& path, RunMode mode);

}  // namespace fdsense
