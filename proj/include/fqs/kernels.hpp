#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fqs {

/// Compressed sparse row matrix (square).
struct CsrMatrix {
  int rows = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  std::vector<double> diagonal() const;
};

/// Builds a CSR matrix from unsorted (row, col, value) triplets, summing duplicates.
CsrMatrix csr_from_triplets(int rows, std::vector<int> r, std::vector<int> c, std::vector<double> v);

// Reference kernels: plain loops, used by tests and the benchmark as ground truth.
namespace serial {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);  // y += alpha x
void xpay(std::span<const double> x, double alpha, std::span<double> y);  // y = x + alpha y
}  // namespace serial

// OpenMP kernels. Reductions sum fixed-size blocks in index order, so results
// do not depend on the thread count.
namespace par {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double alpha, std::span<double> y);
}  // namespace par

/// Blocked reduction of f(i) for i in [0, n); deterministic in the thread count.
template <class F>
double blocked_sum(std::size_t n, F&& f);

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. `x` holds the
/// initial guess on entry.
CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                            double rel_tol, int max_iterations);

/// Maximum worker count (FRACTURE_QS_THREADS caps it when set).
int worker_count();
void apply_thread_cap();

// ---------------------------------------------------------------------------

inline constexpr std::size_t kReduceBlock = 4096;

template <class F>
double blocked_sum(std::size_t n, F&& f) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  if (blocks <= 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f(i);
    return s;
  }
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) {
    const std::size_t lo = static_cast<std::size_t>(blk) * kReduceBlock;
    const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(blk)] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace fqs
