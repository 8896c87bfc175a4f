#include "fdsense/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fdsense/errors.hpp"
#include "fdsense/io.hpp"

namespace fdsense {

using nlohmann::json;

namespace {

double finite(double x, const char* key) {
  if (!std::isfinite(x)) throw NumericalError(std::string("report: non-finite value for '") + key + "'");
  return x;
}

json numbers(const std::vector<double>& v, const char* key) {
  json a = json::array();
  for (double x : v) a.push_back(finite(x, key));
  return a;
}

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    if constexpr (std::is_same_v<T, double>) {
      j[key] = finite(*v, key);
    } else {
      j[key] = *v;
    }
  }
}

template <class T>
void get_opt(const json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

json block_to_json(const ReportBlock& b) {
  return json{{"id", b.id},
              {"sup_value", finite(b.sup_value, "sup_value")},
              {"inf_value", finite(b.inf_value, "inf_value")},
              {"sensitivity", finite(b.sensitivity, "sensitivity")},
              {"share", finite(b.share, "share")},
              {"sup_arg", numbers(b.sup_arg, "sup_arg")},
              {"inf_arg", numbers(b.inf_arg, "inf_arg")}};
}

ReportBlock block_from_json(const json& j) {
  ReportBlock b;
  b.id = j.at("id").get<std::string>();
  b.sup_value = j.at("sup_value").get<double>();
  b.inf_value = j.at("inf_value").get<double>();
  b.sensitivity = j.at("sensitivity").get<double>();
  b.share = j.at("share").get<double>();
  b.sup_arg = j.at("sup_arg").get<std::vector<double>>();
  b.inf_arg = j.at("inf_arg").get<std::vector<double>>();
  return b;
}

}  // namespace

json to_json(const SensitivityReport& r) {
  json j;
  j["spec_version"] = r.schema_version;
  j["mode"] = r.mode;

  json files = json::array();
  for (const auto& f : r.inputs.files) files.push_back({{"key", f.key}, {"path", f.path}, {"sha256", f.sha256}});
  j["inputs"] = {{"files", files}, {"m", r.inputs.m}, {"d_theta", r.inputs.d_theta}, {"d_lambda", r.inputs.d_lambda}};

  if (r.estimate) j["estimate"] = {{"value", finite(r.estimate->value, "estimate")}, {"m", r.estimate->m}};

  if (r.results) {
    const auto& s = *r.results;
    json blocks = json::array();
    for (const auto& b : s.per_block) blocks.push_back(block_to_json(b));
    j["results"] = {{"sup_value", finite(s.sup_value, "sup_value")},
                    {"inf_value", finite(s.inf_value, "inf_value")},
                    {"sup_arg", numbers(s.sup_arg, "sup_arg")},
                    {"inf_arg", numbers(s.inf_arg, "inf_arg")},
                    {"sensitivity", finite(s.sensitivity, "sensitivity")},
                    {"iterations", s.iterations},
                    {"converged", s.converged},
                    {"sup_evaluations", s.sup_evaluations},
                    {"per_block", blocks}};
  }

  if (r.decomposition) {
    const auto& d = *r.decomposition;
    j["decomposition"] = {{"loss_term", finite(d.loss_term, "loss_term")},
                          {"prior_term", finite(d.prior_term, "prior_term")},
                          {"cross_term", finite(d.cross_term, "cross_term")},
                          {"cross_with_factor_2", finite(d.cross_with_factor_2, "cross_with_factor_2")},
                          {"cross_uncorrected", finite(d.cross_uncorrected, "cross_uncorrected")},
                          {"total", finite(d.total, "total")},
                          {"convention", d.convention}};
  }

  if (!r.per_dimension.empty()) {
    json a = json::array();
    for (const auto& b : r.per_dimension) a.push_back({{"id", b.id}, {"value", finite(b.value, "per_dimension")}});
    j["per_dimension"] = a;
  }

  put_opt(j, "directional_derivative", r.directional_derivative);

  json diag = json::object();
  put_opt(diag, "error_bound", r.diagnostics.error_bound);
  put_opt(diag, "delta", r.diagnostics.delta);
  put_opt(diag, "variance", r.diagnostics.variance);
  put_opt(diag, "autocorr_time", r.diagnostics.autocorr_time);
  put_opt(diag, "psd_margin", r.diagnostics.psd_margin);
  put_opt(diag, "converged", r.diagnostics.converged);
  diag["notes"] = r.diagnostics.notes;
  j["diagnostics"] = diag;

  json curves = json::array();
  for (const auto& c : r.curves) {
    if (c.x.size() != c.y.size()) throw ContractError("report: curve '" + c.label + "' has mismatched x and y");
    curves.push_back({{"parameter", c.parameter}, {"label", c.label}, {"x", numbers(c.x, "curve x")},
                      {"y", numbers(c.y, "curve y")}});
  }
  j["curves"] = curves;
  j["extra"] = r.extra;
  return j;
}

SensitivityReport report_from_json(const json& j) {
  try {
    SensitivityReport r;
    r.schema_version = j.at("spec_version").get<std::string>();
    r.mode = j.at("mode").get<std::string>();

    const auto& in = j.at("inputs");
    for (const auto& f : in.at("files")) {
      r.inputs.files.push_back({f.at("key").get<std::string>(), f.at("path").get<std::string>(),
                                f.at("sha256").get<std::string>()});
    }
    r.inputs.m = in.at("m").get<std::size_t>();
    r.inputs.d_theta = in.at("d_theta").get<std::size_t>();
    r.inputs.d_lambda = in.at("d_lambda").get<std::size_t>();

    if (j.contains("estimate")) {
      r.estimate = ReportEstimate{j["estimate"].at("value").get<double>(), j["estimate"].at("m").get<std::size_t>()};
    }
    if (j.contains("results")) {
      const auto& s = j["results"];
      ReportResults res;
      res.sup_value = s.at("sup_value").get<double>();
      res.inf_value = s.at("inf_value").get<double>();
      res.sup_arg = s.at("sup_arg").get<std::vector<double>>();
      res.inf_arg = s.at("inf_arg").get<std::vector<double>>();
      res.sensitivity = s.at("sensitivity").get<double>();
      res.iterations = s.at("iterations").get<std::size_t>();
      res.converged = s.at("converged").get<bool>();
      res.sup_evaluations = s.at("sup_evaluations").get<std::size_t>();
      for (const auto& b : s.at("per_block")) res.per_block.push_back(block_from_json(b));
      r.results = std::move(res);
    }
    if (j.contains("decomposition")) {
      const auto& d = j["decomposition"];
      r.decomposition = ReportDecomposition{d.at("loss_term").get<double>(),
                                            d.at("prior_term").get<double>(),
                                            d.at("cross_term").get<double>(),
                                            d.at("cross_with_factor_2").get<double>(),
                                            d.at("cross_uncorrected").get<double>(),
                                            d.at("total").get<double>(),
                                            d.at("convention").get<std::string>()};
    }
    if (j.contains("per_dimension")) {
      for (const auto& b : j["per_dimension"]) {
        r.per_dimension.push_back({b.at("id").get<std::string>(), b.at("value").get<double>()});
      }
    }
    get_opt(j, "directional_derivative", r.directional_derivative);

    const auto& diag = j.at("diagnostics");
    get_opt(diag, "error_bound", r.diagnostics.error_bound);
    get_opt(diag, "delta", r.diagnostics.delta);
    get_opt(diag, "variance", r.diagnostics.variance);
    get_opt(diag, "autocorr_time", r.diagnostics.autocorr_time);
    get_opt(diag, "psd_margin", r.diagnostics.psd_margin);
    get_opt(diag, "converged", r.diagnostics.converged);
    r.diagnostics.notes = diag.at("notes").get<std::vector<std::string>>();

    for (const auto& c : j.at("curves")) {
      r.curves.push_back({c.at("parameter").get<std::string>(), c.at("label").get<std::string>(),
                          c.at("x").get<std::vector<double>>(), c.at("y").get<std::vector<double>>()});
    }
    r.extra = j.at("extra");
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
}

std::string serialise(const SensitivityReport& report) { return to_json(report).dump(2) + "\n"; }

SensitivityReport parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
  return report_from_json(j);
}

void export_curves(const std::vector<Curve>& curves, const std::filesystem::path& path) {
  if (curves.empty()) throw InputError("no curves requested");
  std::size_t rows = 0;
  for (const auto& c : curves) {
    if (c.x.size() != c.y.size()) throw ContractError("curve '" + c.label + "' has mismatched x and y");
    for (const auto& name : {c.parameter, c.label}) {
      if (name.empty() || name.find_first_of(",\t\n\r") != std::string::npos) {
        throw InputError("curve column name '" + name + "' is empty or contains a delimiter");
      }
    }
    rows = std::max(rows, c.x.size());
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  for (std::size_t k = 0; k < curves.size(); ++k) {
    out << (k ? "," : "") << curves[k].parameter << ',' << curves[k].label;
  }
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < curves.size(); ++k) {
      if (k) out << ',';
      if (i < curves[k].x.size()) out << io::format_double(curves[k].x[i]) << ',' << io::format_double(curves[k].y[i]);
      else out << ',';
    }
    out << '\n';
  }
  if (!out) throw InputError(path.string() + ": write failed");
}

std::vector<Curve> load_curves(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const auto header = split(line);
  if (header.empty() || header.size() % 2 != 0) throw InputError(path.string() + ": header must have an even number of columns");
  std::vector<Curve> curves(header.size() / 2);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    curves[k].parameter = header[2 * k];
    curves[k].label = header[2 * k + 1];
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw InputError(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t k = 0; k < curves.size(); ++k) {
      const auto& xs = cells[2 * k];
      const auto& ys = cells[2 * k + 1];
      if (xs.empty() && ys.empty()) continue;
      std::size_t px = 0;
      std::size_t py = 0;
      double x = 0.0;
      double y = 0.0;
      try {
        x = std::stod(xs, &px);
        y = std::stod(ys, &py);
      } catch (const std::exception&) {
        px = 0;
      }
      if (px == 0 || px != xs.size() || py != ys.size()) {
        throw InputError(path.string() + ": line " + std::to_string(line_no) + ", column " + std::to_string(2 * k + 1) +
                         ": non-numeric cell");
      }
      curves[k].x.push_back(x);
      curves[k].y.push_back(y);
    }
  }
  return curves;
}

}  // namespace fdsense
