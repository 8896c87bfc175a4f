#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fdsense/config.hpp"
#include "fdsense/errors.hpp"
#include "fdsense/report.hpp"
#include "fdsense/run.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

int run_cli(const std::string& mode_text, const std::string& config_path, const std::string& out_path,
            const std::string& curves_path) {
  const fdsense::RunMode mode = fdsense::parse_mode(mode_text);
  fdsense::RunConfig cfg;
  if (config_path.empty()) {
    if (mode != fdsense::RunMode::gaussian_demo) throw fdsense::InputError("--config: required for mode '" + mode_text + "'");
    cfg.mode = mode;
  } else {
    cfg = fdsense::load_config(config_path, mode);
  }

  const fdsense::SensitivityReport report = fdsense::run(cfg);
  const std::string text = fdsense::serialise(report);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw fdsense::InputError("--out: cannot open " + out_path);
    out << text;
    if (!out) throw fdsense::InputError("--out: write failed for " + out_path);
  }
  if (!curves_path.empty()) fdsense::export_curves(report.curves, curves_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-divergence prior and loss sensitivity analysis"};
  std::string mode;
  std::string config;
  std::string out;
  std::string curves;
  app.add_option("mode", mode, "estimate | sensitivity | local | gaussian_demo | decompose")
      ->required()
      ->check(CLI::IsMember({"estimate", "sensitivity", "local", "gaussian_demo", "decompose"}));
  app.add_option("--config", config, "JSON run configuration");
  app.add_option("--out", out, "report path (default: stdout)");
  app.add_option("--curves", curves, "plot-ready curve export path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    return run_cli(mode, config, out, curves);
  } catch (const fdsense::InputError& e) {
    std::cerr << "fd-sense: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fdsense::ContractError& e) {
    std::cerr << "fd-sense: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fdsense::Error& e) {
    std::cerr << "fd-sense: numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
}
