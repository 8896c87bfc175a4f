#include "fdsense/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fdsense/errors.hpp"

namespace fdsense {

using nlohmann::json;

namespace {

/// A JSON object that records which keys were read so that leftovers can be
/// rejected.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw InputError((path_.empty() ? "<root>" : path_) + ": " + msg); }

  [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
    throw InputError(key_path(key) + ": " + msg);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& need(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) throw InputError(key_path(key) + ": missing required key");
    return *v;
  }

  Node child(const std::string& key) { return Node(need(key), key_path(key)); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw InputError(key_path(k) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw InputError(path + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw InputError(path + ": expected a finite number");
  return x;
}

std::size_t as_index(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw InputError(path + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw InputError(path + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw InputError(path + ": expected true or false");
  return v.get<bool>();
}

Vector as_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw InputError(path + ": expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = as_number(v[k], path + "[" + std::to_string(k) + "]");
  }
  return out;
}

std::vector<std::size_t> as_indices(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw InputError(path + ": expected a non-empty array of indices");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_index(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw InputError(path + ": expected a non-empty array of rows");
  std::vector<Vector> rows;
  for (std::size_t k = 0; k < v.size(); ++k) rows.push_back(as_vector(v[k], path + "[" + std::to_string(k) + "]"));
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != rows.front().size()) {
      throw InputError(path + "[" + std::to_string(k) + "]: row length differs from the first row");
    }
    out.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
  }
  return out;
}

std::filesystem::path as_file(const json& v, const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p = as_string(v, path);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::is_regular_file(p)) throw InputError(path + ": file not found: " + p.string());
  return p;
}

void parse_model(Node n, ModelSpec& m) {
  if (const json* v = n.get("kind")) {
    m.kind = as_string(*v, n.key_path("kind"));
    static const std::set<std::string> kinds{"precomputed", "expfam_prior", "joint", "learning_rate", "copula"};
    if (!kinds.count(m.kind)) n.fail_key("kind", "unsupported model kind '" + m.kind + "'");
  }
  if (const json* v = n.get("prior")) {
    const std::string base = n.key_path("prior");
    if (!v->is_array() || v->empty()) throw InputError(base + ": expected a non-empty array of factors");
    for (std::size_t k = 0; k < v->size(); ++k) {
      Node f((*v)[k], base + "[" + std::to_string(k) + "]");
      PriorFactorSpec spec;
      spec.family = as_string(f.need("family"), f.key_path("family"));
      if (spec.family == "gaussian") {
        spec.coords = as_indices(f.need("coords"), f.key_path("coords"));
      } else if (spec.family == "inverse_gamma") {
        spec.coords = {as_index(f.need("coord"), f.key_path("coord"))};
      } else {
        f.fail_key("family", "unsupported family '" + spec.family + "'");
      }
      f.finish();
      m.prior.push_back(std::move(spec));
    }
  }
  if (const json* v = n.get("reference_prior")) {
    const std::string base = n.key_path("reference_prior");
    if (!v->is_array() || v->empty()) throw InputError(base + ": expected a non-empty array of terms");
    for (std::size_t k = 0; k < v->size(); ++k) {
      Node f((*v)[k], base + "[" + std::to_string(k) + "]");
      ReferencePriorSpec spec;
      spec.kind = as_string(f.need("kind"), f.key_path("kind"));
      if (spec.kind == "gaussian") {
        spec.coords = as_indices(f.need("coords"), f.key_path("coords"));
        spec.mean = as_vector(f.need("mean"), f.key_path("mean"));
        spec.cov = as_matrix(f.need("cov"), f.key_path("cov"));
        const auto kdim = static_cast<Eigen::Index>(spec.coords.size());
        if (spec.mean.size() != kdim || spec.cov.rows() != kdim || spec.cov.cols() != kdim) {
          f.fail("mean and cov must match the number of coords");
        }
      } else if (spec.kind == "half_cauchy") {
        spec.coords = {as_index(f.need("coord"), f.key_path("coord"))};
        if (const json* s = f.get("scale")) spec.scale = as_number(*s, f.key_path("scale"));
        if (!(spec.scale > 0.0)) f.fail("scale must be positive");
      } else if (spec.kind == "inverse_gamma") {
        spec.coords = {as_index(f.need("coord"), f.key_path("coord"))};
        spec.shape = as_number(f.need("shape"), f.key_path("shape"));
        spec.rate = as_number(f.need("rate"), f.key_path("rate"));
        if (!(spec.shape > 0.0 && spec.rate > 0.0)) f.fail("shape and rate must be positive");
      } else {
        f.fail_key("kind", "unsupported reference prior '" + spec.kind + "'");
      }
      f.finish();
      m.reference_prior.push_back(std::move(spec));
    }
  }
  if (const json* v = n.get("lambda_ref")) m.lambda_ref = as_vector(*v, n.key_path("lambda_ref"));
  if (const json* v = n.get("lambda")) m.lambda = as_vector(*v, n.key_path("lambda"));
  if (const json* v = n.get("direction")) m.direction = as_vector(*v, n.key_path("direction"));
  if (const json* v = n.get("pair")) {
    const auto idx = as_indices(*v, n.key_path("pair"));
    if (idx.size() != 2 || idx[0] == idx[1]) n.fail_key("pair", "expected two distinct coordinates");
    m.pair_i = idx[0];
    m.pair_j = idx[1];
  }
  if (const json* v = n.get("candidates")) {
    const Vector c = as_vector(*v, n.key_path("candidates"));
    m.candidates.assign(c.data(), c.data() + c.size());
  }
  n.finish();
}

NeighbourhoodSpec parse_neighbourhood(Node n) {
  NeighbourhoodSpec s;
  s.type = as_string(n.need("type"), n.key_path("type"));
  auto bounds = [&n](Vector& lower, Vector& upper) {
    lower = as_vector(n.need("lower"), n.key_path("lower"));
    upper = as_vector(n.need("upper"), n.key_path("upper"));
    if (lower.size() != upper.size()) n.fail("lower and upper have different lengths");
    for (Eigen::Index k = 0; k < lower.size(); ++k) {
      if (lower[k] > upper[k]) n.fail("lower[" + std::to_string(k) + "] exceeds upper[" + std::to_string(k) + "]");
    }
  };
  auto centred = [&n](Vector& lower, Vector& upper) {
    const Vector c = as_vector(n.need("centre"), n.key_path("centre"));
    const double eps = as_number(n.need("eps"), n.key_path("eps"));
    if (eps < 0.0) n.fail_key("eps", "must be non-negative");
    lower = c.array() - eps;
    upper = c.array() + eps;
  };
  if (s.type == "box") {
    bounds(s.lower, s.upper);
  } else if (s.type == "ball") {
    centred(s.lower, s.upper);
  } else if (s.type == "interval") {
    if (n.has("centre") || n.has("eps")) centred(s.lower, s.upper);
    else bounds(s.lower, s.upper);
    if (s.lower.size() != 1) n.fail("interval must be one-dimensional");
  } else if (s.type == "vertices") {
    s.vertices = as_matrix(n.need("vertices"), n.key_path("vertices"));
  } else if (s.type == "blocks") {
    const std::string base = n.key_path("blocks");
    const json& arr = n.need("blocks");
    if (!arr.is_array() || arr.empty()) throw InputError(base + ": expected a non-empty array of blocks");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Node b(arr[k], base + "[" + std::to_string(k) + "]");
      NeighbourhoodSpec::Block blk;
      blk.id = b.has("id") ? as_string(b.need("id"), b.key_path("id")) : "block" + std::to_string(k);
      blk.lower = as_vector(b.need("lower"), b.key_path("lower"));
      blk.upper = as_vector(b.need("upper"), b.key_path("upper"));
      if (blk.lower.size() != blk.upper.size()) b.fail("lower and upper have different lengths");
      for (Eigen::Index j = 0; j < blk.lower.size(); ++j) {
        if (blk.lower[j] > blk.upper[j]) b.fail("lower[" + std::to_string(j) + "] exceeds upper");
      }
      b.finish();
      s.blocks.push_back(std::move(blk));
    }
    Eigen::Index total = 0;
    for (const auto& b : s.blocks) total += b.lower.size();
    s.lower.resize(total);
    s.upper.resize(total);
    Eigen::Index off = 0;
    for (const auto& b : s.blocks) {
      s.lower.segment(off, b.lower.size()) = b.lower;
      s.upper.segment(off, b.upper.size()) = b.upper;
      off += b.lower.size();
    }
  } else {
    n.fail_key("type", "unsupported neighbourhood type '" + s.type + "'");
  }
  n.finish();
  return s;
}

void parse_options(Node n, RunOptions& o) {
  if (const json* v = n.get("seed")) {
    if (!v->is_number_unsigned()) throw InputError(n.key_path("seed") + ": expected a non-negative integer");
    o.seed = v->get<std::uint64_t>();
  }
  if (const json* v = n.get("grid_n")) {
    o.grid_n = as_index(*v, n.key_path("grid_n"));
    if (o.grid_n < 3) n.fail_key("grid_n", "must be at least 3");
  }
  if (const json* v = n.get("max_iter")) {
    o.max_iter = as_index(*v, n.key_path("max_iter"));
    if (o.max_iter < 1) n.fail_key("max_iter", "must be at least 1");
  }
  if (const json* v = n.get("tol")) {
    o.tol = as_number(*v, n.key_path("tol"));
    if (!(o.tol > 0.0)) n.fail_key("tol", "must be positive");
  }
  if (const json* v = n.get("vertex_limit")) o.vertex_limit = as_index(*v, n.key_path("vertex_limit"));
  if (const json* v = n.get("delta")) {
    o.delta = as_number(*v, n.key_path("delta"));
    if (!(*o.delta > 0.0 && *o.delta < 1.0)) n.fail_key("delta", "must lie in (0, 1)");
  }
  if (const json* v = n.get("separable")) o.separable = as_bool(*v, n.key_path("separable"));
  if (const json* v = n.get("cross_convention")) {
    const std::string c = as_string(*v, n.key_path("cross_convention"));
    if (c == "with_factor_2") o.cross_convention = CrossConvention::with_factor_2;
    else if (c == "uncorrected") o.cross_convention = CrossConvention::uncorrected;
    else n.fail_key("cross_convention", "expected 'with_factor_2' or 'uncorrected'");
  }
  if (const json* v = n.get("curve_points")) {
    o.curve_points = as_index(*v, n.key_path("curve_points"));
    if (o.curve_points == 1) n.fail_key("curve_points", "must be 0 or at least 2");
  }
  if (const json* v = n.get("per_dimension")) {
    const std::string base = n.key_path("per_dimension");
    if (!v->is_array() || v->empty()) throw InputError(base + ": expected a non-empty array of index lists");
    for (std::size_t k = 0; k < v->size(); ++k) {
      o.per_dimension.push_back(as_indices((*v)[k], base + "[" + std::to_string(k) + "]"));
    }
  }
  n.finish();
}

}  // namespace

RunMode parse_mode(const std::string& name) {
  if (name == "estimate") return RunMode::estimate;
  if (name == "sensitivity") return RunMode::sensitivity;
  if (name == "local") return RunMode::local;
  if (name == "gaussian_demo") return RunMode::gaussian_demo;
  if (name == "decompose") return RunMode::decompose;
  throw InputError("mode: unknown mode '" + name + "'");
}

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::estimate: return "estimate";
    case RunMode::sensitivity: return "sensitivity";
    case RunMode::local: return "local";
    case RunMode::gaussian_demo: return "gaussian_demo";
    case RunMode::decompose: return "decompose";
  }
  return "unknown";
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir, RunMode mode) {
  Node root(doc, "");
  RunConfig cfg;
  cfg.mode = mode;
  cfg.base_dir = base_dir;

  if (const json* v = root.get("mode")) {
    if (parse_mode(as_string(*v, "mode")) != mode) {
      throw InputError("mode: config is for '" + v->get<std::string>() + "' but '" + mode_name(mode) +
                       "' was requested");
    }
  }
  if (root.has("samples")) {
    Node s = root.child("samples");
    cfg.samples_path = as_file(s.need("path"), s.key_path("path"), base_dir);
    if (const json* v = s.get("origin")) {
      const std::string o = as_string(*v, s.key_path("origin"));
      if (o == "iid") cfg.origin = SampleOrigin::iid;
      else if (o == "mcmc") cfg.origin = SampleOrigin::mcmc;
      else s.fail_key("origin", "expected 'iid' or 'mcmc'");
    }
    s.finish();
  }
  if (root.has("scores")) {
    Node s = root.child("scores");
    for (const char* key : {"reference_posterior", "candidate_posterior", "reference_prior", "candidate_prior",
                            "reference_loss_grad", "candidate_loss_grad"}) {
      if (const json* v = s.get(key)) cfg.scores[key] = as_file(*v, s.key_path(key), base_dir);
    }
    if (const json* v = s.get("loss_basis")) {
      const std::string base = s.key_path("loss_basis");
      if (!v->is_array() || v->empty()) throw InputError(base + ": expected a non-empty array of file paths");
      for (std::size_t k = 0; k < v->size(); ++k) {
        cfg.loss_basis.push_back(as_file((*v)[k], base + "[" + std::to_string(k) + "]", base_dir));
      }
    }
    s.finish();
  }
  if (root.has("model")) parse_model(root.child("model"), cfg.model);
  if (root.has("neighbourhood")) cfg.neighbourhood = parse_neighbourhood(root.child("neighbourhood"));
  if (root.has("options")) parse_options(root.child("options"), cfg.options);
  root.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("--config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path(), mode);
}

}  // namespace fdsense
