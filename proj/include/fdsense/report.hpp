#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fdsense {

inline constexpr const char* kReportSchemaVersion = "1.0";

struct InputDigest {
  std::string key;
  std::string path;
  std::string sha256;
  bool operator==(const InputDigest&) const = default;
};

struct ReportInputs {
  std::vector<InputDigest> files;
  std::size_t m = 0;
  std::size_t d_theta = 0;
  std::size_t d_lambda = 0;
  bool operator==(const ReportInputs&) const = default;
};

struct ReportBlock {
  std::string id;
  double sup_value = 0.0;
  double inf_value = 0.0;
  double sensitivity = 0.0;
  double share = 0.0;
  std::vector<double> sup_arg;
  std::vector<double> inf_arg;
  bool operator==(const ReportBlock&) const = default;
};

struct ReportResults {
  double sup_value = 0.0;
  double inf_value = 0.0;
  std::vector<double> sup_arg;
  std::vector<double> inf_arg;
  double sensitivity = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  std::size_t sup_evaluations = 0;
  std::vector<ReportBlock> per_block;
  bool operator==(const ReportResults&) const = default;
};

struct ReportEstimate {
  double value = 0.0;
  std::size_t m = 0;
  bool operator==(const ReportEstimate&) const = default;
};

struct ReportBlockValue {
  std::string id;
  double value = 0.0;
  bool operator==(const ReportBlockValue&) const = default;
};

struct ReportDecomposition {
  double loss_term = 0.0;
  double prior_term = 0.0;
  double cross_term = 0.0;
  double cross_with_factor_2 = 0.0;
  double cross_uncorrected = 0.0;
  double total = 0.0;
  std::string convention;
  bool operator==(const ReportDecomposition&) const = default;
};

struct ReportDiagnostics {
  std::optional<double> error_bound;
  std::optional<double> delta;
  std::optional<double> variance;
  std::optional<double> autocorr_time;
  std::optional<double> psd_margin;
  std::optional<bool> converged;
  std::vector<std::string> notes;
  bool operator==(const ReportDiagnostics&) const = default;
};

/// One plot-ready curve: objective value against a hyperparameter.
struct Curve {
  std::string parameter;
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool operator==(const Curve&) const = default;
};

struct SensitivityReport {
  std::string schema_version = kReportSchemaVersion;
  std::string mode;
  ReportInputs inputs;
  std::optional<ReportEstimate> estimate;
  std::optional<ReportResults> results;
  std::optional<ReportDecomposition> decomposition;
  std::vector<ReportBlockValue> per_dimension;
  std::optional<double> directional_derivative;
  ReportDiagnostics diagnostics;
  std::vector<Curve> curves;
  /// Mode-specific extras (e.g. moment-form arguments, cross-checks).
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const SensitivityReport&) const = default;
};

nlohmann::json to_json(const SensitivityReport& report);
SensitivityReport report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON text; identical reports serialise to identical bytes.
std::string serialise(const SensitivityReport& report);
SensitivityReport parse_report(const std::string& text);

/// Writes the curves as delimiter-separated text, two columns per curve
/// (parameter, label). Throws InputError when there are no curves.
void export_curves(const std::vector<Curve>& curves, const std::filesystem::path& path);
std::vector<Curve> load_curves(const std::filesystem::path& path);

}  // namespace fdsense
