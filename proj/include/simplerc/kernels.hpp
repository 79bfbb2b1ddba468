#pragma once

#include <cstdint>

#include "simplerc/types.hpp"

// Hot loops in two flavors. `serial` is the reference; `omp` must agree with
// it bit for bit, which the tests assert and the benchmark compares.

namespace simplerc::kernels {

namespace serial {
/// Symmetric 0/1 matrix with X_ij = [u(key, i*n+j) < H_ij] for i <= j.
Matrix sample_bernoulli(const Matrix& H, bool self_loops, std::uint64_t key);
Vector column_sums(const Matrix& X);
/// Rows `rows` of X - sum_{k<K0} d_k v_k v_k'.
Matrix residual_rows(const Matrix& X, const Spectrum& spec, Index K0, const NodeSet& rows);
/// Pearson correlation of the columns of Z (T x n).
Matrix pearson(const Matrix& Z);
}  // namespace serial

namespace omp {
Matrix sample_bernoulli(const Matrix& H, bool self_loops, std::uint64_t key);
Vector column_sums(const Matrix& X);
Matrix residual_rows(const Matrix& X, const Spectrum& spec, Index K0, const NodeSet& rows);
Matrix pearson(const Matrix& Z);
}  // namespace omp

/// Number of OpenMP threads the `omp` kernels will use (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace simplerc::kernels
