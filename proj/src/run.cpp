#include "fdsense/run.hpp"

#include <cmath>
#include <random>

#include "fdsense/io.hpp"
#include "fdsense/kernels.hpp"
#include "fdsense/local_sensitivity.hpp"

namespace fdsense {

using nlohmann::json;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Inputs shared by the file-driven modes.
struct Loaded {
  std::optional<SampleSet> samples;
  ReportInputs inputs;
};

void record(ReportInputs& inputs, const std::string& key, const std::filesystem::path& path) {
  inputs.files.push_back({key, path.lexically_normal().generic_string(), io::sha256_file(path)});
}

const SampleSet& need_samples(const RunConfig& cfg, Loaded& l) {
  if (!l.samples) {
    if (!cfg.samples_path) throw InputError("samples.path: required for mode '" + mode_name(cfg.mode) + "'");
    l.samples = in_context("samples.path", [&] { return io::load_samples(*cfg.samples_path, cfg.origin); });
    record(l.inputs, "samples", *cfg.samples_path);
    l.inputs.m = l.samples->size();
    l.inputs.d_theta = l.samples->dim();
  }
  return *l.samples;
}

PrecomputedScores need_scores(const RunConfig& cfg, Loaded& l, const std::string& key) {
  const SampleSet& s = need_samples(cfg, l);
  const auto it = cfg.scores.find(key);
  if (it == cfg.scores.end()) {
    throw InputError("scores." + key + ": required for mode '" + mode_name(cfg.mode) + "'");
  }
  auto out = in_context("scores." + key, [&] { return io::load_score_matrix(it->second, s.size(), s.dim()); });
  record(l.inputs, key, it->second);
  return out;
}

std::vector<PrecomputedScores> need_loss_basis(const RunConfig& cfg, Loaded& l) {
  const SampleSet& s = need_samples(cfg, l);
  if (cfg.loss_basis.empty()) throw InputError("scores.loss_basis: required for model kind '" + cfg.model.kind + "'");
  std::vector<PrecomputedScores> out;
  for (std::size_t k = 0; k < cfg.loss_basis.size(); ++k) {
    const std::string key = "scores.loss_basis[" + std::to_string(k) + "]";
    out.push_back(in_context(key, [&] { return io::load_score_matrix(cfg.loss_basis[k], s.size(), s.dim()); }));
    record(l.inputs, "loss_basis[" + std::to_string(k) + "]", cfg.loss_basis[k]);
  }
  return out;
}

std::size_t factor_size(const PriorFactorSpec& f) {
  return f.family == "gaussian" ? f.coords.size() + f.coords.size() * f.coords.size() : 2;
}

ExpFamilyPrior make_factor(const PriorFactorSpec& f, std::size_t dim, Vector lambda) {
  if (f.family == "gaussian") return gaussian_family(dim, f.coords, std::move(lambda));
  return inverse_gamma_family(dim, f.coords.front(), std::move(lambda));
}

/// Factors with their hyperparameters set from `lambda` (zeros if absent).
std::vector<ExpFamilyPrior> make_factors(const RunConfig& cfg, std::size_t dim, const std::optional<Vector>& lambda,
                                         const std::string& lambda_key) {
  if (cfg.model.prior.empty()) throw InputError("model.prior: required for model kind '" + cfg.model.kind + "'");
  std::size_t total = 0;
  for (const auto& f : cfg.model.prior) total += factor_size(f);
  if (lambda && static_cast<std::size_t>(lambda->size()) != total) {
    throw InputError(lambda_key + ": has " + std::to_string(lambda->size()) + " entries, the prior has " +
                     std::to_string(total) + " hyperparameters");
  }
  std::vector<ExpFamilyPrior> out;
  std::size_t off = 0;
  for (std::size_t k = 0; k < cfg.model.prior.size(); ++k) {
    const auto& f = cfg.model.prior[k];
    const auto n = factor_size(f);
    Vector lam = lambda ? Vector(lambda->segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(n)))
                        : Vector(Vector::Zero(static_cast<Eigen::Index>(n)));
    out.push_back(in_context("model.prior[" + std::to_string(k) + "]", [&] { return make_factor(f, dim, lam); }));
    off += n;
  }
  return out;
}

ExpFamilyPrior combine(const std::vector<ExpFamilyPrior>& factors) {
  return in_context("model.prior", [&] { return factors.size() == 1 ? factors.front() : product_family(factors); });
}

ScoreField reference_field(const ReferencePriorSpec& r, std::size_t dim) {
  for (auto c : r.coords) {
    if (c >= dim) throw ContractError("coordinate " + std::to_string(c) + " out of range");
  }
  if (r.kind == "half_cauchy") return half_cauchy_score(dim, r.coords.front(), r.scale);
  if (r.kind == "inverse_gamma") {
    return inverse_gamma_family(dim, r.coords.front(), invgamma_natural_from_shape_rate(r.shape, r.rate))
        .score_field();
  }
  return gaussian_family(dim, r.coords, gaussian_natural_from_moment(r.mean, r.cov)).score_field();
}

/// Scores of the reference prior: an explicit file, additive factors, or the
/// prior family at lambda_ref, in that order of preference.
PrecomputedScores reference_prior_scores(const RunConfig& cfg, Loaded& l, const ExpFamilyPrior* family) {
  const SampleSet& s = need_samples(cfg, l);
  if (cfg.scores.count("reference_prior")) return need_scores(cfg, l, "reference_prior");
  if (!cfg.model.reference_prior.empty()) {
    ScoreField field = ScoreField::zero(s.dim());
    for (std::size_t k = 0; k < cfg.model.reference_prior.size(); ++k) {
      field = field + in_context("model.reference_prior[" + std::to_string(k) + "]",
                                 [&] { return reference_field(cfg.model.reference_prior[k], s.dim()); });
    }
    return in_context("model.reference_prior",
                      [&] { return eval_scores_over_samples(field, s, "reference prior"); });
  }
  if (cfg.model.lambda_ref && family != nullptr) {
    return in_context("model.lambda_ref", [&] {
      return eval_scores_over_samples(family->with_lambda(*cfg.model.lambda_ref).score_field(), s, "reference prior");
    });
  }
  throw InputError(
      "model.reference_prior: give scores.reference_prior, model.reference_prior or model.lambda_ref");
}

void require_neighbourhood_dim(const NeighbourhoodSpec& n, std::size_t d) {
  const auto got = static_cast<std::size_t>(n.type == "vertices" ? n.vertices.cols() : n.lower.size());
  if (got != d) {
    throw InputError("neighbourhood: has dimension " + std::to_string(got) + ", the model has " + std::to_string(d) +
                     " hyperparameters");
  }
}

const NeighbourhoodSpec& need_neighbourhood(const RunConfig& cfg) {
  if (!cfg.neighbourhood) throw InputError("neighbourhood: required for mode '" + mode_name(cfg.mode) + "'");
  return *cfg.neighbourhood;
}

SensitivityOptions sens_options(const RunConfig& cfg) {
  return SensitivityOptions{cfg.options.max_iter, cfg.options.tol, cfg.options.vertex_limit};
}

ReportResults to_report(const SensitivityResult& r) {
  ReportResults out;
  out.sup_value = r.sup_value;
  out.inf_value = r.inf_value;
  out.sup_arg = to_std(r.sup_arg);
  out.inf_arg = to_std(r.inf_arg);
  out.sensitivity = r.sensitivity;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.sup_evaluations = r.sup_evaluations;
  for (const auto& b : r.per_block) {
    ReportBlock rb;
    rb.id = b.id;
    rb.sup_value = b.result.sup_value;
    rb.inf_value = b.result.inf_value;
    rb.sensitivity = b.result.sensitivity;
    rb.share = r.sensitivity > 0.0 ? b.result.sensitivity / r.sensitivity : 0.0;
    rb.sup_arg = to_std(b.result.sup_arg);
    rb.inf_arg = to_std(b.result.inf_arg);
    out.per_block.push_back(std::move(rb));
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  if (n > 1) xs.back() = hi;
  return xs;
}

/// One curve per hyperparameter: the objective along coordinate j of the box,
/// all other coordinates held at `base`.
std::vector<Curve> coordinate_curves(const QuadraticObjective& q, const Vector& lower, const Vector& upper,
                                     const Vector& base, std::size_t points) {
  std::vector<Curve> out;
  if (points == 0) return out;
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    Curve c;
    c.parameter = "lambda_" + std::to_string(j);
    c.label = "fd";
    c.x = linspace(lower[j], upper[j], points);
    for (double x : c.x) {
      Vector at = base;
      at[j] = x;
      c.y.push_back(evaluate(q, at));
    }
    out.push_back(std::move(c));
  }
  return out;
}

SensitivityResult optimise(const RunConfig& cfg, const QuadraticObjective& q, const NeighbourhoodSpec& n) {
  return in_context("neighbourhood", [&] {
    if (n.type == "vertices") return sensitivity_polytope(q, PolytopeNeighborhood(n.vertices), sens_options(cfg));
    return sensitivity_box(q, BoxNeighborhood(n.lower, n.upper), sens_options(cfg));
  });
}

void sensitivity_expfam(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const SampleSet& s = need_samples(cfg, l);
  const auto factors = make_factors(cfg, s.dim(), std::nullopt, "model.lambda_ref");
  const ExpFamilyPrior family = combine(factors);
  const PrecomputedScores ref_prior = reference_prior_scores(cfg, l, &family);
  const QuadraticObjective q = in_context("model", [&] { return build_prior_only(s, family, ref_prior); });
  const NeighbourhoodSpec& n = need_neighbourhood(cfg);
  require_neighbourhood_dim(n, q.dim());
  l.inputs.d_lambda = q.dim();

  SensitivityResult r;
  const bool separable = cfg.options.separable || n.type == "blocks";
  if (separable) {
    if (n.type == "vertices") throw InputError("options.separable: needs a box-shaped neighbourhood");
    if (n.type == "blocks" && n.blocks.size() != factors.size()) {
      throw InputError("neighbourhood.blocks: has " + std::to_string(n.blocks.size()) + " blocks, the prior has " +
                       std::to_string(factors.size()) + " factors");
    }
    std::vector<SeparableBlock> blocks;
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      const auto size = static_cast<Eigen::Index>(factors[k].stat_dim());
      const std::string key = n.type == "blocks" ? "neighbourhood.blocks[" + std::to_string(k) + "]" : "neighbourhood";
      if (n.type == "blocks" && n.blocks[k].lower.size() != size) {
        throw InputError(key + ": has dimension " + std::to_string(n.blocks[k].lower.size()) + ", factor " +
                         std::to_string(k) + " has " + std::to_string(size) + " hyperparameters");
      }
      const std::string id =
          n.type == "blocks" ? n.blocks[k].id : "factor" + std::to_string(k) + ":" + cfg.model.prior[k].family;
      QuadraticObjective qk = in_context("model.prior[" + std::to_string(k) + "]",
                                         [&] { return build_prior_only(s, factors[k], ref_prior); });
      BoxNeighborhood box = in_context(key, [&] {
        return BoxNeighborhood(n.lower.segment(off, size), n.upper.segment(off, size));
      });
      blocks.push_back(SeparableBlock{id, std::move(qk), std::move(box)});
      off += size;
    }
    r = in_context("neighbourhood", [&] { return sensitivity_separable(blocks, sens_options(cfg)); });
  } else {
    r = optimise(cfg, q, n);
  }

  rep.results = to_report(r);
  rep.diagnostics.psd_margin = q.psd_margin();
  rep.diagnostics.converged = r.converged;
  rep.extra["objective_constant"] = q.c();
  if (n.type != "vertices") {
    Vector base = 0.5 * (n.lower + n.upper);
    if (cfg.model.lambda_ref && BoxNeighborhood(n.lower, n.upper).contains(*cfg.model.lambda_ref)) {
      base = *cfg.model.lambda_ref;
    }
    rep.curves = coordinate_curves(q, n.lower, n.upper, base, cfg.options.curve_points);
  }
}

void sensitivity_joint(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const SampleSet& s = need_samples(cfg, l);
  const ExpFamilyPrior family = combine(make_factors(cfg, s.dim(), std::nullopt, "model.lambda_ref"));
  const auto basis = need_loss_basis(cfg, l);
  const PrecomputedScores ref_post = need_scores(cfg, l, "reference_posterior");
  const QuadraticObjective q = in_context("model", [&] { return build_joint(s, family, basis, ref_post); });
  const NeighbourhoodSpec& n = need_neighbourhood(cfg);
  require_neighbourhood_dim(n, q.dim());
  if (cfg.options.separable || n.type == "blocks") {
    throw InputError("options.separable: the joint objective couples loss and prior; use a box");
  }
  l.inputs.d_lambda = q.dim();
  const SensitivityResult r = optimise(cfg, q, n);
  rep.results = to_report(r);
  rep.diagnostics.psd_margin = q.psd_margin();
  rep.diagnostics.converged = r.converged;
  rep.extra["objective_constant"] = q.c();
  if (n.type != "vertices") {
    rep.curves = coordinate_curves(q, n.lower, n.upper, 0.5 * (n.lower + n.upper), cfg.options.curve_points);
  }
}

void sensitivity_learning_rate(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const auto basis = need_loss_basis(cfg, l);
  if (basis.size() != 1) throw InputError("scores.loss_basis: a learning rate takes exactly one loss-gradient file");
  const NeighbourhoodSpec& n = need_neighbourhood(cfg);
  require_neighbourhood_dim(n, 1);
  l.inputs.d_lambda = 1;
  const double centre = 0.5 * (n.lower[0] + n.upper[0]);
  const double eps = 0.5 * (n.upper[0] - n.lower[0]);
  if (cfg.model.lambda_ref && std::abs((*cfg.model.lambda_ref)[0] - centre) > 1e-12 * (1.0 + std::abs(centre))) {
    throw InputError("neighbourhood: a learning-rate interval must be centred on model.lambda_ref");
  }

  const RowMatrix& g = basis.front().values();
  const Vector norm_vec = kernels::parallel::row_dot(g, g);
  const std::vector<double> norms = to_std(norm_vec);
  const double closed = learning_rate_sensitivity(norms, eps);

  const QuadraticObjective q = in_context("scores.loss_basis", [&] {
    return build_loss_only(basis, Vector::Constant(1, centre));
  });
  const SensitivityResult r = optimise(cfg, q, n);
  rep.results = to_report(r);
  rep.diagnostics.psd_margin = q.psd_margin();
  rep.diagnostics.converged = r.converged;
  rep.extra["eps"] = eps;
  rep.extra["lambda_ref"] = centre;
  rep.extra["closed_form_sensitivity"] = closed;
  rep.extra["mean_grad_norm_sq"] = kernels::compensated_mean(norms);
  rep.curves = coordinate_curves(q, n.lower, n.upper, Vector::Constant(1, centre), cfg.options.curve_points);
}

double copula_objective(const SampleSet& s, std::size_t i, std::size_t j, double lambda_c) {
  const GaussianCopulaScore c{lambda_c, i, j};
  std::vector<double> terms(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) terms[r] = copula_score(c, s.row(r)).squaredNorm();
  return kernels::compensated_mean(terms);
}

void sensitivity_copula(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const SampleSet& s = need_samples(cfg, l);
  const auto i = cfg.model.pair_i;
  const auto j = cfg.model.pair_j;
  if (i >= s.dim() || j >= s.dim()) throw InputError("model.pair: coordinate out of range for the samples");
  const NeighbourhoodSpec& n = need_neighbourhood(cfg);
  if (n.type != "interval") throw InputError("neighbourhood.type: the copula model needs an interval");
  if (!(n.lower[0] > -1.0 && n.upper[0] < 1.0)) throw InputError("neighbourhood: copula correlation must lie in (-1, 1)");
  l.inputs.d_lambda = 1;

  auto f = [&](double lc) { return copula_objective(s, i, j, lc); };
  const SensitivityResult r =
      in_context("model", [&] { return sensitivity_scalar_search(f, n.lower[0], n.upper[0], cfg.options.grid_n); });
  rep.results = to_report(r);
  rep.diagnostics.converged = r.converged;
  if (!cfg.model.candidates.empty()) {
    json cands = json::array();
    double best = -std::numeric_limits<double>::infinity();
    double best_at = 0.0;
    for (double c : cfg.model.candidates) {
      const double v = in_context("model.candidates", [&] { return f(c); });
      cands.push_back({{"lambda", c}, {"value", v}});
      if (v > best) {
        best = v;
        best_at = c;
      }
    }
    rep.extra["candidates"] = cands;
    rep.extra["candidate_sup"] = {{"lambda", best_at}, {"value", best}};
  }
  if (cfg.options.curve_points > 0) {
    Curve c;
    c.parameter = "lambda_c";
    c.label = "fd";
    c.x = linspace(n.lower[0], n.upper[0], cfg.options.curve_points);
    for (double x : c.x) c.y.push_back(f(x));
    rep.curves.push_back(std::move(c));
  }
}

void run_estimate(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const auto ref = need_scores(cfg, l, "reference_posterior");
  const auto cand = need_scores(cfg, l, "candidate_posterior");
  const FdEstimate e = in_context("scores", [&] { return estimate_fd(ref, cand, true); });
  rep.estimate = ReportEstimate{e.value, e.m};
  const double delta = cfg.options.delta.value_or(0.05);
  const std::span<const double> per(e.per_sample->data(), static_cast<std::size_t>(e.per_sample->size()));
  const ErrorBound b = in_context("options.delta", [&] {
    return chebyshev_error_bound(per, delta, cfg.origin, l.samples->chain_ids());
  });
  rep.diagnostics.error_bound = b.value;
  rep.diagnostics.delta = delta;
  rep.diagnostics.variance = b.variance;
  rep.diagnostics.autocorr_time = b.autocorr_time;
  rep.diagnostics.notes.push_back("error_bound is a plug-in heuristic: sample variance times autocorrelation time");
  if (!cfg.options.per_dimension.empty()) {
    const Vector parts = in_context("options.per_dimension",
                                    [&] { return per_dimension_fd(ref, cand, cfg.options.per_dimension); });
    for (std::size_t k = 0; k < cfg.options.per_dimension.size(); ++k) {
      std::string id;
      for (auto c : cfg.options.per_dimension[k]) id += (id.empty() ? "" : "+") + std::to_string(c);
      rep.per_dimension.push_back({"theta_" + id, parts[static_cast<Eigen::Index>(k)]});
    }
  }
}

void run_decompose(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const auto rl = need_scores(cfg, l, "reference_loss_grad");
  const auto cl = need_scores(cfg, l, "candidate_loss_grad");
  const auto rp = need_scores(cfg, l, "reference_prior");
  const auto cp = need_scores(cfg, l, "candidate_prior");
  const FdDecomposition d = in_context("scores", [&] { return decompose_fd(rl, cl, rp, cp, cfg.options.cross_convention); });
  rep.decomposition = ReportDecomposition{d.loss_term,
                                          d.prior_term,
                                          d.cross_term(),
                                          d.cross_with_factor_2,
                                          d.cross_literal,
                                          d.total,
                                          d.convention == CrossConvention::with_factor_2 ? "with_factor_2" : "uncorrected"};
  rep.estimate = ReportEstimate{d.total, rl.rows()};
  rep.diagnostics.notes.push_back(
      "cross_with_factor_2 = -2 mean(a.b) reconstructs the total; cross_uncorrected = mean(a.b)");
}

void run_local(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const SampleSet& s = need_samples(cfg, l);
  if (cfg.model.kind != "expfam_prior") throw InputError("model.kind: local mode needs 'expfam_prior'");
  const std::optional<Vector> at = cfg.model.lambda ? cfg.model.lambda : cfg.model.lambda_ref;
  if (!at) throw InputError("model.lambda: required for local mode (or model.lambda_ref)");
  const ExpFamilyPrior cand = combine(make_factors(cfg, s.dim(), at, cfg.model.lambda ? "model.lambda" : "model.lambda_ref"));
  if (!cfg.model.direction) throw InputError("model.direction: required for local mode");
  if (cfg.model.direction->size() != static_cast<Eigen::Index>(cand.stat_dim())) {
    throw InputError("model.direction: has " + std::to_string(cfg.model.direction->size()) + " entries, the prior has " +
                     std::to_string(cand.stat_dim()) + " hyperparameters");
  }
  l.inputs.d_lambda = cand.stat_dim();
  const auto ref_post = need_scores(cfg, l, "reference_posterior");
  const auto ref_prior = reference_prior_scores(cfg, l, &cand);
  const auto cand_post = in_context("model.lambda", [&] { return prior_swap_scores(s, ref_post, ref_prior, cand); });
  const double dd = in_context("model.direction", [&] {
    return directional_derivative(s, ref_post, cand_post, expfam_score_jacobian(cand), *cfg.model.direction);
  });
  rep.directional_derivative = dd;
  const QuadraticObjective q = in_context("model", [&] { return build_prior_only(s, cand, ref_prior); });
  rep.diagnostics.psd_margin = q.psd_margin();
  rep.extra["lambda"] = to_std(*at);
  rep.extra["direction"] = to_std(*cfg.model.direction);
  rep.extra["quadratic_gradient_check"] = cfg.model.direction->dot(q.gradient(*at));
  rep.extra["fd_at_lambda"] = evaluate(q, *at);
}

void run_sensitivity(const RunConfig& cfg, Loaded& l, SensitivityReport& rep) {
  const std::string& kind = cfg.model.kind;
  if (kind == "expfam_prior") sensitivity_expfam(cfg, l, rep);
  else if (kind == "joint") sensitivity_joint(cfg, l, rep);
  else if (kind == "learning_rate") sensitivity_learning_rate(cfg, l, rep);
  else if (kind == "copula") sensitivity_copula(cfg, l, rep);
  else throw InputError("model.kind: '" + kind + "' has nothing to optimise; use estimate or decompose mode");
}

void run_gaussian_demo(const RunConfig& cfg, SensitivityReport& rep) {
  GaussianDemoSetup setup;
  setup.seed = cfg.options.seed;
  const GaussianDemo demo = make_gaussian_demo(setup);
  rep.inputs.m = demo.samples.size();
  rep.inputs.d_theta = 1;
  rep.inputs.d_lambda = 2;

  const SensitivityResult r = sensitivity_polytope(demo.objective, demo.gamma, sens_options(cfg));
  const VertexMax top = sup_over_vertices(demo.objective, demo.gamma);
  rep.results = to_report(r);
  rep.diagnostics.psd_margin = demo.objective.psd_margin();
  rep.diagnostics.converged = r.converged;

  const double l0 = top.arg[0];
  const double l1 = top.arg[1];
  rep.extra["sup_vertex_index"] = top.index + 1;
  if (l1 < 0.0) {
    const double var = -1.0 / (2.0 * l1);
    rep.extra["sup_moments"] = {{"mu", l0 * var}, {"sigma", std::sqrt(var)}};
  } else {
    rep.diagnostics.notes.push_back("supremum vertex has lambda_1 >= 0 and no moment form");
  }
  rep.extra["data"] = {{"n", setup.n},          {"theta_true", setup.theta_true}, {"sigma_l", setup.sigma_l},
                       {"mu_ref", setup.mu_ref}, {"sigma_ref", setup.sigma_ref},   {"m", setup.m},
                       {"seed", setup.seed},     {"xbar", demo.xbar}};
  json vertices = json::array();
  for (std::size_t k = 0; k < demo.gamma.size(); ++k) {
    const Vector v = demo.gamma.vertex(k);
    vertices.push_back({{"lambda", to_std(v)}, {"fd", evaluate(demo.objective, v)}});
  }
  rep.extra["vertices"] = vertices;

  // The posterior stays proper as long as the data precision dominates.
  if (-2.0 * l1 + static_cast<double>(setup.n) / (setup.sigma_l * setup.sigma_l) > 0.0) {
    const GaussianDist cand = conjugate_posterior(top.arg.head(1), top.arg.tail(1),
                                                  Matrix::Constant(1, 1, setup.sigma_l * setup.sigma_l),
                                                  Vector::Constant(1, demo.xbar), setup.n);
    rep.extra["sup_closed_form_fd"] = fd_gaussian(demo.reference_posterior, cand);
  }

  const std::size_t points = cfg.options.curve_points ? cfg.options.curve_points : 201;
  for (double sigma : {2.0, 3.0, 4.0, 5.0}) {
    Curve c;
    c.parameter = "mu";
    c.label = "fd_sigma_" + io::format_double(sigma);
    c.x = linspace(-10.0, 10.0, points);
    for (double mu : c.x) {
      const Vector lam = gaussian_natural_from_moment(Vector::Constant(1, mu), Matrix::Constant(1, 1, sigma * sigma));
      c.y.push_back(evaluate(demo.objective, lam));
    }
    rep.curves.push_back(std::move(c));
  }
}

}  // namespace

PrecomputedScores prior_swap_scores(const SampleSet& samples, const PrecomputedScores& ref_posterior,
                                    const PrecomputedScores& ref_prior, const ExpFamilyPrior& candidate) {
  ref_posterior.require_aligned(samples);
  ref_prior.require_aligned(samples);
  const PrecomputedScores cand_prior = eval_scores_over_samples(candidate.score_field(), samples, "candidate prior");
  RowMatrix v = ref_posterior.values() - ref_prior.values() + cand_prior.values();
  return PrecomputedScores(std::move(v), "candidate posterior");
}

GaussianDemo make_gaussian_demo(const GaussianDemoSetup& setup) {
  std::mt19937_64 rng(setup.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < setup.n; ++k) sum += setup.theta_true + setup.sigma_l * unit(rng);
  const double xbar = setup.n ? sum / static_cast<double>(setup.n) : 0.0;

  const Vector lambda_ref =
      gaussian_natural_from_moment(Vector::Constant(1, setup.mu_ref), Matrix::Constant(1, 1, setup.sigma_ref * setup.sigma_ref));
  GaussianDist post = conjugate_posterior(lambda_ref.head(1), lambda_ref.tail(1),
                                          Matrix::Constant(1, 1, setup.sigma_l * setup.sigma_l),
                                          Vector::Constant(1, xbar), setup.n);
  const double mu_n = post.mean()[0];
  const double sd_n = std::sqrt(post.cov()(0, 0));
  RowMatrix draws(static_cast<Eigen::Index>(setup.m), 1);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) draws(i, 0) = mu_n + sd_n * unit(rng);
  SampleSet samples(std::move(draws));

  ExpFamilyPrior family = gaussian_family(1, {0}, lambda_ref);
  PrecomputedScores ref_prior = eval_scores_over_samples(family.score_field(), samples, "reference prior");
  PrecomputedScores ref_post = eval_scores_over_samples(gaussian_score_field(post), samples, "reference posterior");
  QuadraticObjective q = build_prior_only(samples, family, ref_prior);

  Matrix v(4, 2);
  v << -2.5, -0.125, -0.4, -0.02, 2.5, -0.125, 0.4, 0.02;
  return GaussianDemo{setup,
                      xbar,
                      std::move(post),
                      std::move(samples),
                      std::move(ref_prior),
                      std::move(ref_post),
                      std::move(family),
                      std::move(q),
                      PolytopeNeighborhood(std::move(v))};
}

ReportResults report_results(const SensitivityResult& r) { return to_report(r); }

SensitivityReport run(const RunConfig& cfg) {
  SensitivityReport rep;
  rep.mode = mode_name(cfg.mode);
  Loaded l;
  switch (cfg.mode) {
    case RunMode::estimate: run_estimate(cfg, l, rep); break;
    case RunMode::decompose: run_decompose(cfg, l, rep); break;
    case RunMode::sensitivity: run_sensitivity(cfg, l, rep); break;
    case RunMode::local: run_local(cfg, l, rep); break;
    case RunMode::gaussian_demo: run_gaussian_demo(cfg, rep); return rep;
  }
  rep.inputs.files = l.inputs.files;
  rep.inputs.m = l.inputs.m;
  rep.inputs.d_theta = l.inputs.d_theta;
  rep.inputs.d_lambda = l.inputs.d_lambda;
  return rep;
}

}  // namespace fdsense
