#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdsense/report.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = FDSENSE_TEST_DATA;
const std::string kCli = FDSENSE_CLI;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fdsense_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Outcome {
  int code = -1;
  std::string err;
};

Outcome cli(const std::string& args) {
  const fs::path err = scratch("stderr.txt");
  const std::string cmd = "'" + kCli + "' " + args + " 2>'" + err.string() + "' >/dev/null";
  const int status = std::system(cmd.c_str());
  return Outcome{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string config(const std::string& name) { return "--config '" + (kData / name).string() + "'"; }

}  // namespace

TEST_CASE("successful runs exit 0 and repeat byte for byte") {
  const std::vector<std::pair<std::string, std::string>> runs{
      {"estimate", "estimate.json"},   {"estimate", "estimate_identical.json"}, {"decompose", "decompose.json"},
      {"sensitivity", "prior_box.json"}, {"sensitivity", "prior_blocks.json"},  {"sensitivity", "learning_rate.json"},
      {"local", "local.json"},         {"sensitivity", "copula.json"}};
  for (const auto& [mode, file] : runs) {
    CAPTURE(file);
    const fs::path a = scratch("a.json");
    const fs::path b = scratch("b.json");
    CHECK(cli(mode + " " + config(file) + " --out '" + a.string() + "'").code == 0);
    CHECK(cli(mode + " " + config(file) + " --out '" + b.string() + "'").code == 0);
    const std::string first = slurp(a);
    CHECK(!first.empty());
    CHECK(first == slurp(b));
    CHECK(fdsense::parse_report(first).mode == mode);
  }
}

TEST_CASE("gaussian demo runs without a config and exports curves") {
  const fs::path out = scratch("demo.json");
  const fs::path curves = scratch("demo_curves.csv");
  CHECK(cli("gaussian_demo --out '" + out.string() + "' --curves '" + curves.string() + "'").code == 0);
  const fdsense::SensitivityReport r = fdsense::parse_report(slurp(out));
  REQUIRE(r.results.has_value());
  CHECK(r.results->sup_arg == std::vector<double>{-2.5, -0.125});
  CHECK(fdsense::load_curves(curves) == r.curves);
}

TEST_CASE("config errors exit 2") {
  Outcome o = cli("estimate " + config("bad_unknown_key.json"));
  CHECK(o.code == 2);
  CHECK(o.err.find("samples.orign") != std::string::npos);
  o = cli("estimate " + config("bad_missing_file.json"));
  CHECK(o.code == 2);
  CHECK(o.err.find("scores.candidate_posterior") != std::string::npos);
  CHECK(cli("estimate").code == 2);
  CHECK(cli("explore " + config("estimate.json")).code == 2);
  CHECK(cli("sensitivity " + config("estimate.json")).code == 2);
  const fs::path bad = scratch("broken.json");
  std::ofstream(bad) << "{\"samples\": ";
  CHECK(cli("estimate --config '" + bad.string() + "'").code == 2);
}

TEST_CASE("numerical failures exit 3") {
  const Outcome o = cli("sensitivity " + config("bad_vertex_limit.json"));
  CHECK(o.code == 3);
  CHECK(o.err.find("neighbourhood") != std::string::npos);
}
