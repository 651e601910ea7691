// Serial reference kernels against the OpenMP ones, on a 2D lattice Laplacian
// of the size the elastic solves produce. Run with --benchmark_filter to pick.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "fqs/kernels.hpp"

using namespace fqs;

namespace {

// n x n grid, 5-point stencil plus a small shift so CG has an SPD system.
CsrMatrix laplacian(int n) {
  std::vector<int> r, c;
  std::vector<double> v;
  auto id = [n](int i, int j) { return i * n + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      r.push_back(id(i, j));
      c.push_back(id(i, j));
      v.push_back(4.0 + 1e-3);
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& q : nb)
        if (q[0] >= 0 && q[0] < n && q[1] >= 0 && q[1] < n) {
          r.push_back(id(i, j));
          c.push_back(id(q[0], q[1]));
          v.push_back(-1.0);
        }
    }
  return csr_from_triplets(n * n, std::move(r), std::move(c), std::move(v));
}

std::vector<double> ramp(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * static_cast<double>(i % 97);
  return x;
}

// Threads for the par variants come from the second argument; 0 means the default.
struct Threads {
  int saved = omp_get_max_threads();
  explicit Threads(int t) {
    if (t > 0) omp_set_num_threads(t);
  }
  ~Threads() { omp_set_num_threads(saved); }
};

template <bool Par>
void BM_spmv(benchmark::State& st) {
  Threads th(static_cast<int>(st.range(1)));
  const CsrMatrix a = laplacian(static_cast<int>(st.range(0)));
  const auto x = ramp(static_cast<std::size_t>(a.rows));
  std::vector<double> y(x.size());
  for (auto _ : st) {
    if constexpr (Par) par::spmv(a, x, y); else serial::spmv(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(a.val.size()));
}

template <bool Par>
void BM_dot(benchmark::State& st) {
  Threads th(static_cast<int>(st.range(1)));
  const auto n = static_cast<std::size_t>(st.range(0) * st.range(0));
  const auto x = ramp(n), y = ramp(n);
  for (auto _ : st) benchmark::DoNotOptimize(Par ? par::dot(x, y) : serial::dot(x, y));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(n));
}

template <bool Par>
void BM_axpy(benchmark::State& st) {
  Threads th(static_cast<int>(st.range(1)));
  const auto n = static_cast<std::size_t>(st.range(0) * st.range(0));
  const auto x = ramp(n);
  std::vector<double> y = ramp(n);
  for (auto _ : st) {
    if constexpr (Par) par::axpy(1e-9, x, y); else serial::axpy(1e-9, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(n));
}

// Full solve; the CG uses the par kernels, so threads = 1 is the serial baseline.
void BM_cg(benchmark::State& st) {
  Threads th(static_cast<int>(st.range(1)));
  const CsrMatrix a = laplacian(static_cast<int>(st.range(0)));
  const auto b = ramp(static_cast<std::size_t>(a.rows));
  int iters = 0;
  for (auto _ : st) {
    std::vector<double> x(b.size(), 0.0);
    iters = conjugate_gradient(a, b, x, 1e-10, 10000).iterations;
    benchmark::DoNotOptimize(x.data());
  }
  st.counters["cg_iterations"] = iters;
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int n : {64, 256, 1024}) b->Args({n, 0});
}

void threads(benchmark::internal::Benchmark* b) {
  for (int t : {1, 2, 4, 0}) b->Args({256, t});
}

}  // namespace

BENCHMARK(BM_spmv<false>)->Apply(sizes);
BENCHMARK(BM_spmv<true>)->Apply(sizes)->Apply(threads);
BENCHMARK(BM_dot<false>)->Apply(sizes);
BENCHMARK(BM_dot<true>)->Apply(sizes)->Apply(threads);
BENCHMARK(BM_axpy<false>)->Apply(sizes);
BENCHMARK(BM_axpy<true>)->Apply(sizes)->Apply(threads);
BENCHMARK(BM_cg)->Args({128, 1})->Args({128, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
