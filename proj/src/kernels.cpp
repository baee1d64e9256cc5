#include "iae/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "iae/error.hpp"

#ifdef IAE_HAVE_OPENMP
#include <omp.h>
#endif

namespace iae::kernels {
namespace {

std::atomic<bool> g_parallel{true};

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ShapeError(0, op, what);
}

void shape_output(Tensor& out, std::size_t rows, std::size_t cols) {
  if (out.rank() != 2 || out.rows() != rows || out.cols() != cols) {
    out = Tensor::matrix(rows, cols);
  } else {
    out.fill(0.0);
  }
}

// Per-row bodies shared by both variants so the arithmetic is identical.

inline void matmul_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t k_dim = a.cols();
  const std::size_t m = b.cols();
  double* o = out.data() + i * m;
  const double* ai = a.data() + i * k_dim;
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aik = ai[k];
    const double* bk = b.data() + k * m;
    for (std::size_t j = 0; j < m; ++j) o[j] += aik * bk[j];
  }
}

inline void matmul_tn_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t k_dim = a.rows();
  const std::size_t n = a.cols();
  const std::size_t m = b.cols();
  double* o = out.data() + i * m;
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aki = a.data()[k * n + i];
    const double* bk = b.data() + k * m;
    for (std::size_t j = 0; j < m; ++j) o[j] += aki * bk[j];
  }
}

inline void matmul_nt_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t k_dim = a.cols();
  const std::size_t m = b.rows();
  const double* ai = a.data() + i * k_dim;
  double* o = out.data() + i * m;
  for (std::size_t j = 0; j < m; ++j) {
    const double* bj = b.data() + j * k_dim;
    double s = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) s += ai[k] * bj[k];
    o[j] = s;
  }
}

inline void sqdist_row(const Tensor& p, const Tensor& q, Tensor& out, std::size_t i) {
  const std::size_t d = p.cols();
  const std::size_t m = q.rows();
  const double* pi = p.data() + i * d;
  double* o = out.data() + i * m;
  for (std::size_t j = 0; j < m; ++j) {
    const double* qj = q.data() + j * d;
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = pi[k] - qj[k];
      s += diff * diff;
    }
    o[j] = s;
  }
}

inline double softmin_row(const Tensor& cost, std::span<const double> pot, double eps,
                          std::size_t i) {
  const std::size_t m = cost.cols();
  const double* ci = cost.data() + i * m;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, (pot[j] - ci[j]) / eps);
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += std::exp((pot[j] - ci[j]) / eps - mx);
  return -eps * (mx + std::log(s));
}

inline double softmin_col(const Tensor& cost, std::span<const double> pot, double eps,
                          std::size_t j) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, (pot[i] - cost.data()[i * m + j]) / eps);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp((pot[i] - cost.data()[i * m + j]) / eps - mx);
  return -eps * (mx + std::log(s));
}

void check_matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul",
          "inner dims differ: " + a.shape_string() + " * " + b.shape_string());
}
void check_matmul_tn(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "matmul_tn",
          "row counts differ: " + a.shape_string() + "^T * " + b.shape_string());
}
void check_matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt",
          "col counts differ: " + a.shape_string() + " * " + b.shape_string() + "^T");
}
void check_sqdist(const Tensor& p, const Tensor& q) {
  require(p.cols() == q.cols(), "pairwise_sqdist",
          "point dims differ: " + p.shape_string() + " vs " + q.shape_string());
}
void check_softmin(const Tensor& cost, std::size_t pot, std::size_t expect_pot,
                   std::size_t out, std::size_t expect_out, double eps) {
  require(pot == expect_pot && out == expect_out, "softmin",
          "potential/output length mismatch for cost " + cost.shape_string());
  require(eps > 0.0, "softmin", "eps must be positive");
}

}  // namespace

bool set_parallel(bool enabled) { return g_parallel.exchange(enabled); }

bool parallel_enabled() {
#ifdef IAE_HAVE_OPENMP
  return g_parallel.load();
#else
  return false;
#endif
}

int max_threads() {
#ifdef IAE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  check_matmul(a, b);
  shape_output(out, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  check_matmul_tn(a, b);
  shape_output(out, a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, out, i);
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  check_matmul_nt(a, b);
  shape_output(out, a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
}

void pairwise_sqdist(const Tensor& p, const Tensor& q, Tensor& out) {
  check_sqdist(p, q);
  shape_output(out, p.rows(), q.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) sqdist_row(p, q, out, i);
}

void softmin_rows(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out) {
  check_softmin(cost, pot.size(), cost.cols(), out.size(), cost.rows(), eps);
  for (std::size_t i = 0; i < cost.rows(); ++i) out[i] = softmin_row(cost, pot, eps, i);
}

void softmin_cols(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out) {
  check_softmin(cost, pot.size(), cost.rows(), out.size(), cost.cols(), eps);
  for (std::size_t j = 0; j < cost.cols(); ++j) out[j] = softmin_col(cost, pot, eps, j);
}

}  // namespace serial

namespace omp {

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  check_matmul(a, b);
  shape_output(out, a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  check_matmul_tn(a, b);
  shape_output(out, a.cols(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  check_matmul_nt(a, b);
  shape_output(out, a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
}

void pairwise_sqdist(const Tensor& p, const Tensor& q, Tensor& out) {
  check_sqdist(p, q);
  shape_output(out, p.rows(), q.rows());
  const auto n = static_cast<std::ptrdiff_t>(p.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) sqdist_row(p, q, out, static_cast<std::size_t>(i));
}

void softmin_rows(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out) {
  check_softmin(cost, pot.size(), cost.cols(), out.size(), cost.rows(), eps);
  const auto n = static_cast<std::ptrdiff_t>(cost.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = softmin_row(cost, pot, eps, static_cast<std::size_t>(i));
  }
}

void softmin_cols(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out) {
  check_softmin(cost, pot.size(), cost.rows(), out.size(), cost.cols(), eps);
  const auto m = static_cast<std::ptrdiff_t>(cost.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < m; ++j) {
    out[static_cast<std::size_t>(j)] = softmin_col(cost, pot, eps, static_cast<std::size_t>(j));
  }
}

}  // namespace omp

// Small problems stay serial; the OpenMP fork/join costs more than they do.
namespace {
constexpr std::size_t kParallelMinWork = 1 << 15;
bool go_parallel(std::size_t work) { return parallel_enabled() && work >= kParallelMinWork; }
}  // namespace

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  if (go_parallel(a.rows() * a.cols() * b.cols())) return omp::matmul(a, b, out);
  serial::matmul(a, b, out);
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  if (go_parallel(a.rows() * a.cols() * b.cols())) return omp::matmul_tn(a, b, out);
  serial::matmul_tn(a, b, out);
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  if (go_parallel(a.rows() * a.cols() * b.rows())) return omp::matmul_nt(a, b, out);
  serial::matmul_nt(a, b, out);
}

void pairwise_sqdist(const Tensor& p, const Tensor& q, Tensor& out) {
  if (go_parallel(p.rows() * q.rows() * p.cols())) return omp::pairwise_sqdist(p, q, out);
  serial::pairwise_sqdist(p, q, out);
}

void softmin_rows(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out) {
  if (go_parallel(cost.size() * 8)) return omp::softmin_rows(cost, pot, eps, out);
  serial::softmin_rows(cost, pot, eps, out);
}

void softmin_cols(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out) {
  if (go_parallel(cost.size() * 8)) return omp::softmin_cols(cost, pot, eps, out);
  serial::softmin_cols(cost, pot, eps, out);
}

}  // namespace iae::kernels
