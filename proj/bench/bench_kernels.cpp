// Serial reference kernels against their OpenMP counterparts.

#include <random>

#include <benchmark/benchmark.h>

#include "fdsense/kernels.hpp"

namespace {

using fdsense::RowMatrix;
using fdsense::Matrix;
using fdsense::Vector;
namespace k = fdsense::kernels;

RowMatrix random_rows(std::size_t m, std::size_t d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return x;
}

template <bool Parallel>
void BM_Fd(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const RowMatrix a = random_rows(m, 10, 1);
  const RowMatrix b = random_rows(m, 10, 2);
  for (auto _ : state) {
    const RowMatrix diff = a - b;
    const Vector terms = Parallel ? k::parallel::row_dot(diff, diff) : k::serial::row_dot(diff, diff);
    const std::span<const double> s(terms.data(), static_cast<std::size_t>(terms.size()));
    double v = Parallel ? k::parallel::compensated_sum(s) : k::serial::compensated_sum(s);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m));
}

template <bool Parallel>
void BM_Gram(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t d_theta = 10;
  const std::size_t d_lambda = 20;
  const RowMatrix x = random_rows(m, d_theta, 3);
  auto feature = [&](std::size_t i, Matrix& jac, Vector& resid) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index p = 0; p < jac.rows(); ++p) {
      for (Eigen::Index q = 0; q < jac.cols(); ++q) jac(p, q) = x(r, p) * static_cast<double>(q + 1);
    }
    resid = x.row(r).transpose();
  };
  for (auto _ : state) {
    auto g = Parallel ? k::parallel::gram(m, d_theta, d_lambda, feature)
                      : k::serial::gram(m, d_theta, d_lambda, feature);
    benchmark::DoNotOptimize(g.rtr);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m));
}

}  // namespace

BENCHMARK(BM_Fd<false>)->Name("fd_serial")->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_Fd<true>)->Name("fd_parallel")->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_Gram<false>)->Name("gram_serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_Gram<true>)->Name("gram_parallel")->Arg(1 << 12)->Arg(1 << 15);

BENCHMARK_MAIN();
