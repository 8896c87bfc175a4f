#pragma once

// Data-parallel kernels shared by the estimation and quadratic-form code.
//
// Every kernel has a serial reference and an OpenMP version. Reductions in
// the OpenMP versions are split into fixed-size blocks that are combined in
// block order, so results never depend on the thread count or schedule.

#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include "fdsense/linalg.hpp"

namespace fdsense::kernels {

inline constexpr std::size_t kSumBlock = 1024;
inline constexpr std::size_t kGramBlock = 256;

/// Neumaier (improved Kahan) accumulator.
struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
  /// Folds in another accumulator's running sum and compensation.
  void merge(const Neumaier& other) {
    add(other.sum);
    comp += other.comp;
  }
};

/// Unnormalised Gram sums over samples: sum J^T J, sum J^T r, sum r^T r.
struct GramSums {
  Matrix jtj;
  Vector jtr;
  double rtr = 0.0;
};

namespace detail {

inline Neumaier block_sum(std::span<const double> x, std::size_t block) {
  const std::size_t lo = block * kSumBlock;
  const std::size_t hi = std::min(x.size(), lo + kSumBlock);
  Neumaier acc;
  for (std::size_t i = lo; i < hi; ++i) acc.add(x[i]);
  return acc;
}

inline std::size_t block_count(std::size_t n, std::size_t block) { return (n + block - 1) / block; }

template <class Feature>
void gram_range(std::size_t lo, std::size_t hi, std::size_t d_theta, std::size_t d_lambda, Feature& feature,
                GramSums& out) {
  Matrix jac(d_theta, d_lambda);
  Vector resid(d_theta);
  for (std::size_t i = lo; i < hi; ++i) {
    feature(i, jac, resid);
    out.jtj.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
    out.jtr.noalias() += jac.transpose() * resid;
    out.rtr += resid.squaredNorm();
  }
}

inline GramSums zero_gram(std::size_t d_lambda) {
  return GramSums{Matrix::Zero(d_lambda, d_lambda), Vector::Zero(d_lambda), 0.0};
}

inline void finish_gram(GramSums& g) {
  // rankUpdate only fills the lower triangle.
  g.jtj = g.jtj.selfadjointView<Eigen::Lower>();
}

}  // namespace detail

namespace serial {

/// Blocked compensated sum evaluated on one thread; bitwise identical to
/// parallel::compensated_sum.
inline double compensated_sum(std::span<const double> x) {
  Neumaier total;
  const std::size_t nb = detail::block_count(x.size(), kSumBlock);
  for (std::size_t b = 0; b < nb; ++b) total.merge(detail::block_sum(x, b));
  return total.value();
}

/// Row-wise inner products x_i . y_i.
inline Vector row_dot(const RowMatrix& x, const RowMatrix& y) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = x.row(i).dot(y.row(i));
  return out;
}

template <class F>
void for_each_index(std::size_t n, F&& f) {
  for (std::size_t i = 0; i < n; ++i) f(i);
}

/// Textbook accumulation in sample order.
template <class Feature>
GramSums gram(std::size_t m, std::size_t d_theta, std::size_t d_lambda, Feature&& feature) {
  GramSums g = detail::zero_gram(d_lambda);
  detail::gram_range(0, m, d_theta, d_lambda, feature, g);
  detail::finish_gram(g);
  return g;
}

}  // namespace serial

namespace parallel {

/// Runs f(i) for i in [0, n). Every index is attempted; if any throw, the
/// exception of the lowest failing index is rethrown.
template <class F>
void for_each_index(std::size_t n, F&& f) {
  const auto count = static_cast<std::ptrdiff_t>(n);
  std::ptrdiff_t first_bad = count;
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(fdsense_first_error)
      {
        if (i < first_bad) {
          first_bad = i;
          err = std::current_exception();
        }
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

inline double compensated_sum(std::span<const double> x) {
  const std::size_t nb = detail::block_count(x.size(), kSumBlock);
  std::vector<Neumaier> partial(nb);
  for_each_index(nb, [&](std::size_t b) { partial[b] = detail::block_sum(x, b); });
  Neumaier total;
  for (const auto& p : partial) total.merge(p);
  return total.value();
}

inline Vector row_dot(const RowMatrix& x, const RowMatrix& y) {
  Vector out(x.rows());
  for_each_index(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[r] = x.row(r).dot(y.row(r));
  });
  return out;
}

/// Per-block partial Gram sums combined in block order.
template <class Feature>
GramSums gram(std::size_t m, std::size_t d_theta, std::size_t d_lambda, Feature&& feature) {
  const std::size_t nb = detail::block_count(m, kGramBlock);
  std::vector<GramSums> partial(nb);
  for_each_index(nb, [&](std::size_t b) {
    GramSums g = detail::zero_gram(d_lambda);
    detail::gram_range(b * kGramBlock, std::min(m, (b + 1) * kGramBlock), d_theta, d_lambda, feature, g);
    partial[b] = std::move(g);
  });
  GramSums total = detail::zero_gram(d_lambda);
  for (const auto& g : partial) {
    total.jtj += g.jtj;
    total.jtr += g.jtr;
    total.rtr += g.rtr;
  }
  detail::finish_gram(total);
  return total;
}

}  // namespace parallel

/// Mean of x with the blocked compensated sum.
inline double compensated_mean(std::span<const double> x) {
  return parallel::compensated_sum(x) / static_cast<double>(x.size());
}

}  // namespace fdsense::kernels
