#include "fdsense/neighborhoods.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <string>

#include "fdsense/errors.hpp"
#include "fdsense/kernels.hpp"

namespace fdsense {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ContractError(std::string(what) + " has dimension " + std::to_string(got) + ", objective has " +
                        std::to_string(want));
  }
}

std::string abscissa(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Exact minimiser over the coordinates that are not pinned to a bound.
std::optional<Vector> solve_free_face(const QuadraticObjective& q, const BoxNeighborhood& box, const Vector& at) {
  const auto d = static_cast<Eigen::Index>(q.dim());
  std::vector<Eigen::Index> free_idx;
  std::vector<Eigen::Index> fixed_idx;
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool pinned = at[j] <= box.lower()[j] || at[j] >= box.upper()[j];
    (pinned ? fixed_idx : free_idx).push_back(j);
  }
  if (free_idx.empty()) return std::nullopt;
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  Matrix aff(nf, nf);
  Vector rhs(nf);
  for (Eigen::Index r = 0; r < nf; ++r) {
    rhs[r] = 0.5 * q.b()[free_idx[r]];
    for (auto k : fixed_idx) rhs[r] += q.a()(free_idx[r], k) * at[k];
    for (Eigen::Index c = 0; c < nf; ++c) aff(r, c) = q.a()(free_idx[r], free_idx[c]);
  }
  const Vector x = -(symmetric_pinv(aff) * rhs);
  Vector out = at;
  for (Eigen::Index r = 0; r < nf; ++r) out[free_idx[r]] = x[r];
  if (!out.allFinite() || !box.contains(out, 1e-12)) return std::nullopt;
  return box.clip(out);
}

}  // namespace

BoxNeighborhood::BoxNeighborhood(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw ContractError("box bounds must be non-empty and of equal length");
  }
  if (!lower_.allFinite() || !upper_.allFinite()) throw ContractError("box bounds must be finite");
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (lower_[j] > upper_[j]) {
      throw ContractError("box lower bound exceeds upper bound in coordinate " + std::to_string(j));
    }
  }
}

Vector BoxNeighborhood::clip(const Vector& lambda) const { return lambda.cwiseMax(lower_).cwiseMin(upper_); }

bool BoxNeighborhood::contains(const Vector& lambda, double tol) const {
  if (lambda.size() != lower_.size()) return false;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double slack = tol * std::max(1.0, std::abs(lambda[j]));
    if (lambda[j] < lower_[j] - slack || lambda[j] > upper_[j] + slack) return false;
  }
  return true;
}

BoxNeighborhood BoxNeighborhood::ball(const Vector& centre, double eps) {
  if (!(eps >= 0.0)) throw ContractError("neighbourhood radius must be non-negative");
  return BoxNeighborhood(centre.array() - eps, centre.array() + eps);
}

PolytopeNeighborhood::PolytopeNeighborhood(Matrix vertices) : vertices_(std::move(vertices)) {
  if (vertices_.rows() < 1 || vertices_.cols() < 1) throw ContractError("polytope needs at least one vertex");
  if (!vertices_.allFinite()) throw ContractError("polytope vertices must be finite");
}

VertexMax sup_over_vertices(const QuadraticObjective& q, const PolytopeNeighborhood& p) {
  require_dim(p.dim(), q.dim(), "polytope");
  const std::size_t k = p.size();
  std::vector<double> values(k);
  kernels::parallel::for_each_index(k, [&](std::size_t v) { values[v] = evaluate(q, p.vertex(v)); });
  std::size_t best = 0;
  for (std::size_t v = 1; v < k; ++v) {
    if (values[v] > values[best]) best = v;
  }
  return VertexMax{p.vertex(best), values[best], best, k};
}

PolytopeNeighborhood box_vertices(const BoxNeighborhood& box, std::size_t max_dim) {
  const std::size_t d = box.dim();
  if (d > max_dim || d >= 63) {
    throw NumericalError("box has " + std::to_string(d) + " hyperparameters; enumerating 2^" + std::to_string(d) +
                         " vertices exceeds the limit of 2^" + std::to_string(max_dim) +
                         " (use the separable block mode)");
  }
  const std::size_t count = std::size_t{1} << d;
  Matrix v(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool upper = (k >> (d - 1 - j)) & 1U;
      v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          upper ? box.upper()[static_cast<Eigen::Index>(j)] : box.lower()[static_cast<Eigen::Index>(j)];
    }
  }
  return PolytopeNeighborhood(std::move(v));
}

Vector unconstrained_min(const QuadraticObjective& q, double rtol) {
  return -0.5 * (symmetric_pinv(q.a(), rtol) * q.b());
}

BoxMin pgd_min_box(const QuadraticObjective& q, const BoxNeighborhood& box, std::size_t max_iter, double tol) {
  if (max_iter < 1) throw ContractError("max_iter must be at least 1");
  if (!(tol > 0.0)) throw ContractError("tol must be positive");
  require_dim(box.dim(), q.dim(), "box");

  const Vector unc = unconstrained_min(q);
  const bool stationary = q.gradient(unc).norm() <= 1e-10 * (1.0 + q.b().norm());
  if (stationary && box.contains(unc)) {
    Vector arg = box.clip(unc);
    const double value = evaluate(q, arg);
    return BoxMin{std::move(arg), value, 0, true};
  }
  const double top = q.max_eigenvalue();
  if (!(top > 0.0)) {
    // Linear objective: each coordinate goes to the bound against b.
    Vector arg = box.centre();
    for (Eigen::Index k = 0; k < arg.size(); ++k) {
      if (q.b()[k] > 0.0) arg[k] = box.lower()[k];
      else if (q.b()[k] < 0.0) arg[k] = box.upper()[k];
    }
    const double value = evaluate(q, arg);
    return BoxMin{std::move(arg), value, 0, true};
  }

  const double step = 1.0 / (2.0 * top);
  Vector lambda = box.centre();
  BoxMin out;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Vector next = box.clip(lambda - step * q.gradient(lambda));
    const double moved = (next - lambda).norm();
    lambda = std::move(next);
    out.iterations = it;
    if (moved <= tol) {
      out.converged = true;
      break;
    }
  }
  out.value = evaluate(q, lambda);
  out.arg = lambda;
  if (auto polished = solve_free_face(q, box, lambda)) {
    const double value = evaluate(q, *polished);
    if (value <= out.value) {
      out.value = value;
      out.arg = std::move(*polished);
    }
  }
  return out;
}

SensitivityResult sensitivity_box(const QuadraticObjective& q, const BoxNeighborhood& box,
                                  const SensitivityOptions& opts) {
  require_dim(box.dim(), q.dim(), "box");
  const VertexMax top = sup_over_vertices(q, box_vertices(box, opts.vertex_limit));
  const BoxMin bottom = pgd_min_box(q, box, opts.max_iter, opts.tol);
  SensitivityResult r;
  r.sup_value = top.value;
  r.sup_arg = top.arg;
  r.sup_evaluations = top.evaluations;
  r.inf_value = std::min(bottom.value, top.value);
  r.inf_arg = bottom.arg;
  r.sensitivity = r.sup_value - r.inf_value;
  r.iterations = bottom.iterations;
  r.converged = bottom.converged;
  return r;
}

namespace {

/// Minimiser of w'Hw + g'w on the affine hull {sum w = 1} of the current
/// support. Returns false with a descent ray in `dir` when the problem is
/// unbounded there (H singular along a direction where g still decreases).
bool affine_qp(const Matrix& h, const Vector& g, Vector& alpha, Vector& dir) {
  const Eigen::Index k = h.rows();
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = 2.0 * h;
  kkt.block(0, k, k, 1).setOnes();
  kkt.block(k, 0, 1, k).setOnes();
  Vector rhs(k + 1);
  rhs.head(k) = -g;
  rhs[k] = 1.0;
  const Vector sol = symmetric_pinv(kkt) * rhs;
  const Vector resid = rhs - kkt * sol;
  if (resid.norm() <= 1e-9 * (1.0 + rhs.norm())) {
    alpha = sol.head(k);
    return true;
  }
  dir = resid.head(k);
  dir.array() -= dir.mean();
  return false;
}

struct SimplexMin {
  Vector weights;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimises q(V'w) over the probability simplex, V holding one vertex per
/// row. Active-set method in the style of Wolfe's minimum-norm-point
/// algorithm; the k x k Hessian is never formed.
SimplexMin simplex_min(const QuadraticObjective& q, const Matrix& v, std::size_t max_iter) {
  const Eigen::Index n = v.rows();
  const Vector vb = v * q.b();
  auto grad = [&](const Vector& lam) -> Vector { return 2.0 * (v * (q.a() * lam)) + vb; };
  auto lambda_of = [&](const std::vector<Eigen::Index>& s, const Vector& w) {
    Vector lam = Vector::Zero(v.cols());
    for (std::size_t k = 0; k < s.size(); ++k) lam += w[static_cast<Eigen::Index>(k)] * v.row(s[k]).transpose();
    return lam;
  };

  Eigen::Index first = 0;
  Vector vals(n);
  for (Eigen::Index k = 0; k < n; ++k) vals[k] = evaluate(q, v.row(k).transpose());
  vals.minCoeff(&first);
  std::vector<Eigen::Index> support{first};
  Vector w = Vector::Ones(1);

  SimplexMin out;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    const Vector gr = grad(lambda_of(support, w));
    const double level = [&] {
      double t = 0.0;
      for (std::size_t k = 0; k < support.size(); ++k) t += w[static_cast<Eigen::Index>(k)] * gr[support[k]];
      return t;
    }();
    Eigen::Index j = 0;
    gr.minCoeff(&j);
    const double tol = 1e-12 * (1.0 + gr.cwiseAbs().maxCoeff());
    if (gr[j] >= level - tol || std::find(support.begin(), support.end(), j) != support.end()) {
      out.converged = true;
      break;
    }
    support.push_back(j);
    w.conservativeResize(w.size() + 1);
    w[w.size() - 1] = 0.0;

    for (std::size_t minor = 0; minor <= static_cast<std::size_t>(n) + 1; ++minor) {
      const auto ns = static_cast<Eigen::Index>(support.size());
      Matrix vs(ns, v.cols());
      Vector gs(ns);
      for (Eigen::Index k = 0; k < ns; ++k) {
        vs.row(k) = v.row(support[static_cast<std::size_t>(k)]);
        gs[k] = vb[support[static_cast<std::size_t>(k)]];
      }
      const Matrix hs = vs * q.a() * vs.transpose();
      Vector alpha;
      Vector dir;
      double theta = 1.0;
      if (affine_qp(hs, gs, alpha, dir)) {
        if ((alpha.array() > 1e-14).all()) {
          w = alpha;
          break;
        }
        for (Eigen::Index k = 0; k < ns; ++k) {
          if (alpha[k] <= 1e-14 && w[k] - alpha[k] > 0.0) theta = std::min(theta, w[k] / (w[k] - alpha[k]));
        }
        w = theta * alpha + (1.0 - theta) * w;
      } else {
        // Objective is linear and decreasing along dir; follow it to the boundary.
        double step = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < ns; ++k) {
          if (dir[k] < 0.0) step = std::min(step, -w[k] / dir[k]);
        }
        w += step * dir;
      }
      std::vector<Eigen::Index> kept;
      std::vector<double> kept_w;
      for (std::size_t k = 0; k < support.size(); ++k) {
        if (w[static_cast<Eigen::Index>(k)] > 1e-14) {
          kept.push_back(support[k]);
          kept_w.push_back(w[static_cast<Eigen::Index>(k)]);
        }
      }
      support = std::move(kept);
      w = Eigen::Map<const Vector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
      w /= w.sum();
    }
  }

  out.weights = Vector::Zero(n);
  for (std::size_t k = 0; k < support.size(); ++k) out.weights[support[k]] = w[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace

SensitivityResult sensitivity_polytope(const QuadraticObjective& q, const PolytopeNeighborhood& p,
                                       const SensitivityOptions& opts) {
  if (opts.max_iter < 1) throw ContractError("max_iter must be at least 1");
  require_dim(p.dim(), q.dim(), "polytope");
  const VertexMax top = sup_over_vertices(q, p);

  SensitivityResult r;
  r.sup_value = top.value;
  r.sup_arg = top.arg;
  r.sup_evaluations = top.evaluations;

  const SimplexMin mnp = simplex_min(q, p.vertices(), opts.max_iter);
  r.inf_arg = p.vertices().transpose() * mnp.weights;
  r.inf_value = evaluate(q, r.inf_arg);
  if (top.value < r.inf_value) {
    r.inf_value = top.value;
    r.inf_arg = top.arg;
  }
  r.sensitivity = r.sup_value - r.inf_value;
  r.iterations = mnp.iterations;
  r.converged = mnp.converged;
  return r;
}

SensitivityResult sensitivity_separable(const std::vector<SeparableBlock>& blocks, const SensitivityOptions& opts) {
  if (blocks.empty()) throw ContractError("separable sensitivity needs at least one block");
  std::size_t total_dim = 0;
  for (const auto& b : blocks) total_dim += b.objective.dim();
  SensitivityResult r;
  r.sup_arg.resize(static_cast<Eigen::Index>(total_dim));
  r.inf_arg.resize(static_cast<Eigen::Index>(total_dim));
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    SensitivityResult part = sensitivity_box(b.objective, b.box, opts);
    const auto n = static_cast<Eigen::Index>(b.objective.dim());
    r.sup_arg.segment(off, n) = part.sup_arg;
    r.inf_arg.segment(off, n) = part.inf_arg;
    off += n;
    r.sup_value += part.sup_value;
    r.inf_value += part.inf_value;
    r.sensitivity += part.sensitivity;
    r.iterations += part.iterations;
    r.converged = r.converged && part.converged;
    r.sup_evaluations += part.sup_evaluations;
    r.per_block.push_back(BlockResult{b.id, std::move(part)});
  }
  return r;
}

namespace {

constexpr double kInvPhi = 0.6180339887498948482;

/// Golden-section search for the maximum of sign * f on [a, b].
std::pair<double, double> golden(const std::function<double(double)>& f, double a, double b, double sign,
                                 double width, std::size_t& evals) {
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = sign * f(x1);
  double f2 = sign * f(x2);
  evals += 2;
  while (b - a > width) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = sign * f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = sign * f(x2);
    }
    ++evals;
  }
  return f1 >= f2 ? std::pair{x1, sign * f1} : std::pair{x2, sign * f2};
}

}  // namespace

SensitivityResult sensitivity_scalar_search(const std::function<double(double)>& f, double lo, double hi,
                                            std::size_t grid_n) {
  if (grid_n < 3) throw ContractError("grid_n must be at least 3");
  if (!(std::isfinite(lo) && std::isfinite(hi)) || lo > hi) throw ContractError("interval must satisfy lo <= hi");
  std::vector<double> xs(grid_n);
  std::vector<double> ys(grid_n);
  for (std::size_t k = 0; k < grid_n; ++k) {
    xs[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid_n - 1);
  }
  xs.back() = hi;
  auto checked = [&f](double x) {
    const double y = f(x);
    if (!std::isfinite(y)) throw EvaluationError("objective is not finite at lambda = " + abscissa(x));
    return y;
  };
  kernels::parallel::for_each_index(grid_n, [&](std::size_t k) { ys[k] = checked(xs[k]); });

  std::size_t best = 0;
  std::size_t worst = 0;
  for (std::size_t k = 1; k < grid_n; ++k) {
    if (ys[k] > ys[best]) best = k;
    if (ys[k] < ys[worst]) worst = k;
  }
  SensitivityResult r;
  r.sup_evaluations = grid_n;
  r.sup_value = ys[best];
  r.sup_arg = Vector::Constant(1, xs[best]);
  r.inf_value = ys[worst];
  r.inf_arg = Vector::Constant(1, xs[worst]);

  const double width = 1e-10 * (hi - lo);
  if (width > 0.0) {
    auto bracket = [&](std::size_t k) {
      return std::pair{xs[k == 0 ? 0 : k - 1], xs[std::min(k + 1, grid_n - 1)]};
    };
    std::size_t evals = 0;
    const auto [bl, bh] = bracket(best);
    const auto [xmax, fmax] = golden(checked, bl, bh, 1.0, width, evals);
    if (fmax > r.sup_value) {
      r.sup_value = fmax;
      r.sup_arg[0] = xmax;
    }
    r.sup_evaluations += evals;
    std::size_t inf_evals = 0;
    const auto [wl, wh] = bracket(worst);
    const auto [xmin, fmin] = golden(checked, wl, wh, -1.0, width, inf_evals);
    if (fmin < r.inf_value) {
      r.inf_value = fmin;
      r.inf_arg[0] = xmin;
    }
    r.iterations = evals + inf_evals;
  }
  r.sensitivity = r.sup_value - r.inf_value;
  r.converged = true;
  return r;
}

double learning_rate_sensitivity(std::span<const double> grad_l_norms_sq, double eps) {
  if (!(eps >= 0.0)) throw ContractError("neighbourhood radius eps must be non-negative");
  if (grad_l_norms_sq.empty()) throw ContractError("need at least one gradient norm");
  return eps * eps * kernels::compensated_mean(grad_l_norms_sq);
}

}  // namespace fdsense
