#pragma once

// Dense inner loops used by the tape, the model's inference path and the
// evaluation sweeps. Each kernel exists twice: a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`. The OpenMP
// versions split work over independent output rows (or columns) only, so they
// are bitwise identical to the serial ones for any thread count.
//
// The unqualified `kernels::*` entry points dispatch to the OpenMP variant
// when it is compiled in and enabled, otherwise to the serial one.

#include <cstddef>
#include <span>

#include "iae/tensor.hpp"

namespace iae::kernels {

// C = A * B, A is n x k, B is k x m.
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
// C = A^T * B, A is k x n, B is k x m.
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out);
// C = A * B^T, A is n x k, B is m x k.
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out);
// D_ij = ||p_i - q_j||^2.
void pairwise_sqdist(const Tensor& p, const Tensor& q, Tensor& out);
// out_i = -eps * log sum_j exp((pot_j - C_ij) / eps), pot has C.cols() entries.
void softmin_rows(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out);
// out_j = -eps * log sum_i exp((pot_i - C_ij) / eps), pot has C.rows() entries.
void softmin_cols(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out);

// Toggle for the dispatching entry points. Returns the previous setting.
bool set_parallel(bool enabled);
bool parallel_enabled();
int max_threads();

namespace serial {
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out);
void pairwise_sqdist(const Tensor& p, const Tensor& q, Tensor& out);
void softmin_rows(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out);
void softmin_cols(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out);
}  // namespace serial

namespace omp {
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out);
void pairwise_sqdist(const Tensor& p, const Tensor& q, Tensor& out);
void softmin_rows(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out);
void softmin_cols(const Tensor& cost, std::span<const double> pot, double eps,
                  std::span<double> out);
}  // namespace omp

}  // namespace iae::kernels
