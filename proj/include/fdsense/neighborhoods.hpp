#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdsense/quadratic_form.hpp"

namespace fdsense {

/// Hyperrectangle lower <= lambda <= upper.
class BoxNeighborhood {
 public:
  BoxNeighborhood(Vector lower, Vector upper);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector centre() const { return 0.5 * (lower_ + upper_); }
  Vector clip(const Vector& lambda) const;
  bool contains(const Vector& lambda, double tol = 1e-12) const;
  /// Symmetric interval [centre - eps, centre + eps] in every coordinate.
  static BoxNeighborhood ball(const Vector& centre, double eps);

 private:
  Vector lower_;
  Vector upper_;
};

/// Convex hull of an explicit vertex list, one vertex per row.
class PolytopeNeighborhood {
 public:
  explicit PolytopeNeighborhood(Matrix vertices);

  std::size_t dim() const { return static_cast<std::size_t>(vertices_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(vertices_.rows()); }
  const Matrix& vertices() const { return vertices_; }
  Vector vertex(std::size_t k) const { return vertices_.row(static_cast<Eigen::Index>(k)).transpose(); }

 private:
  Matrix vertices_;
};

struct BlockResult;

/// sup / inf of the empirical FD over a neighbourhood and their difference.
struct SensitivityResult {
  double sup_value = 0.0;
  double inf_value = 0.0;
  Vector sup_arg;
  Vector inf_arg;
  double sensitivity = 0.0;
  std::vector<BlockResult> per_block;
  std::size_t iterations = 0;
  bool converged = true;
  /// Number of objective evaluations spent on the supremum.
  std::size_t sup_evaluations = 0;
};

struct BlockResult {
  std::string id;
  SensitivityResult result;
};

struct VertexMax {
  Vector arg;
  double value = 0.0;
  std::size_t index = 0;
  std::size_t evaluations = 0;
};

/// Vertex with the largest objective value; ties go to the lowest index.
VertexMax sup_over_vertices(const QuadraticObjective& q, const PolytopeNeighborhood& p);

inline constexpr std::size_t kDefaultVertexLimit = 20;

/// All 2^d corners in lexicographic order (first coordinate most
/// significant, lower bound before upper bound).
PolytopeNeighborhood box_vertices(const BoxNeighborhood& box, std::size_t max_dim = kDefaultVertexLimit);

/// Minimum-norm minimiser -1/2 pinv(A) b.
Vector unconstrained_min(const QuadraticObjective& q, double rtol = 1e-12);

struct BoxMin {
  Vector arg;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Projected gradient descent for the box-constrained minimum, started at
/// the box centre with step 1/(2 lambda_max(A)). Returns the unconstrained
/// minimiser immediately when it is feasible. After the iterations an exact
/// solve on the free coordinates of the detected active set is accepted if
/// it is feasible and no worse.
BoxMin pgd_min_box(const QuadraticObjective& q, const BoxNeighborhood& box, std::size_t max_iter = 100000,
                   double tol = 1e-13);

struct SensitivityOptions {
  std::size_t max_iter = 100000;
  double tol = 1e-13;
  std::size_t vertex_limit = kDefaultVertexLimit;
};

SensitivityResult sensitivity_box(const QuadraticObjective& q, const BoxNeighborhood& box,
                                  const SensitivityOptions& opts = {});

/// Supremum by vertex enumeration. The infimum is a minimum-norm point of the
/// vertices mapped by A^{1/2} about the unconstrained minimiser, found with
/// Wolfe's finite active-set algorithm.
SensitivityResult sensitivity_polytope(const QuadraticObjective& q, const PolytopeNeighborhood& p,
                                       const SensitivityOptions& opts = {});

struct SeparableBlock {
  std::string id;
  QuadraticObjective objective;
  BoxNeighborhood box;
};

/// Sum of per-block sensitivities; args are concatenated in block order.
SensitivityResult sensitivity_separable(const std::vector<SeparableBlock>& blocks,
                                        const SensitivityOptions& opts = {});

inline constexpr std::size_t kDefaultGridSize = 512;

/// Dense grid of grid_n points on [lo, hi] followed by golden-section
/// refinement around the best and worst cells. Deterministic.
SensitivityResult sensitivity_scalar_search(const std::function<double(double)>& f, double lo, double hi,
                                            std::size_t grid_n = kDefaultGridSize);

/// eps^2 * mean(grad_l_norms_sq): the sensitivity over |lambda_L - ref| <= eps
/// of a scalar learning rate.
double learning_rate_sensitivity(std::span<const double> grad_l_norms_sq, double eps);

}  // namespace fdsense
