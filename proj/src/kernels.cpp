#include "fqs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fqs {

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(rows), 0.0);
  for (int i = 0; i < rows; ++i)
    for (int k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      if (col[static_cast<std::size_t>(k)] == i) d[static_cast<std::size_t>(i)] += val[static_cast<std::size_t>(k)];
  return d;
}

CsrMatrix csr_from_triplets(int rows, std::vector<int> r, std::vector<int> c, std::vector<double> v) {
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r[a] != r[b] ? r[a] < r[b] : c[a] < c[b];
  });
  CsrMatrix m;
  m.rows = rows;
  m.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  int last_r = -1, last_c = -1;
  for (std::size_t k : order) {
    if (r[k] == last_r && c[k] == last_c) {
      m.val.back() += v[k];
      continue;
    }
    m.col.push_back(c[k]);
    m.val.push_back(v[k]);
    ++m.row_ptr[static_cast<std::size_t>(r[k]) + 1];
    last_r = r[k];
    last_c = c[k];
  }
  for (int i = 0; i < rows; ++i) m.row_ptr[static_cast<std::size_t>(i) + 1] += m.row_ptr[static_cast<std::size_t>(i)];
  return m;
}

namespace serial {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  for (int i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      s += a.val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(a.col[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(i)] = s;
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpay(std::span<const double> x, double alpha, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + alpha * y[i];
}

}  // namespace serial

namespace par {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  const int* rp = a.row_ptr.data();
  const int* ci = a.col.data();
  const double* v = a.val.data();
  const double* xp = x.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) if (a.rows > 2048)
  for (int i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * xp[ci[k]];
    yp[i] = s;
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  const double* xp = x.data();
  const double* yp = y.data();
  return blocked_sum(x.size(), [=](std::size_t i) { return xp[i] * yp[i]; });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const double* xp = x.data();
  double* yp = y.data();
#pragma omp parallel for simd schedule(static) if (n > 8192)
  for (std::ptrdiff_t i = 0; i < n; ++i) yp[i] += alpha * xp[i];
}

void xpay(std::span<const double> x, double alpha, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const double* xp = x.data();
  double* yp = y.data();
#pragma omp parallel for simd schedule(static) if (n > 8192)
  for (std::ptrdiff_t i = 0; i < n; ++i) yp[i] = xp[i] + alpha * yp[i];
}

}  // namespace par

CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                            double rel_tol, int max_iterations) {
  const std::size_t n = static_cast<std::size_t>(a.rows);
  CgResult res;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::vector<double> inv_diag = a.diagonal();
  for (auto& d : inv_diag) d = d > 0.0 ? 1.0 / d : 1.0;

  std::vector<double> r(n), z(n), p(n), ap(n);
  par::spmv(a, x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  const double bnorm = std::sqrt(par::dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = par::dot(r, z);
  double rnorm = std::sqrt(par::dot(r, r));
  while (rnorm > rel_tol * bnorm && res.iterations < max_iterations) {
    par::spmv(a, p, ap);
    const double pap = par::dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    par::axpy(alpha, p, x);
    par::axpy(-alpha, ap, r);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = par::dot(r, z);
    par::xpay(z, rz_new / rz, p);
    rz = rz_new;
    rnorm = std::sqrt(par::dot(r, r));
    ++res.iterations;
  }
  res.relative_residual = rnorm / bnorm;
  res.converged = rnorm <= rel_tol * bnorm;
  return res;
}

int worker_count() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("FRACTURE_QS_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(n, 1);
}

void apply_thread_cap() {
#ifdef _OPENMP
  omp_set_num_threads(worker_count());
#endif
}

}  // namespace fqs
