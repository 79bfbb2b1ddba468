#include "simplerc/kernels.hpp"

#include <cmath>
#include <omp.h>

#include "simplerc/error.hpp"
#include "simplerc/rng.hpp"

namespace simplerc::kernels {
namespace {

inline double bernoulli_entry(const Matrix& H, std::uint64_t key, Index i, Index j, Index n) {
  const auto counter = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) +
                       static_cast<std::uint64_t>(j);
  return rng::uniform(key, counter) < H(i, j) ? 1.0 : 0.0;
}

void check_square(const Matrix& H) {
  if (H.rows() != H.cols()) throw ValidationError("mean matrix must be square");
}

void check_residual_args(const Matrix& X, const Spectrum& spec, Index K0, const NodeSet& rows) {
  if (K0 < 0 || K0 > spec.vector_count())
    throw ValidationError("K0 exceeds the number of available eigenvectors");
  if (spec.n() != X.rows()) throw ValidationError("spectrum and matrix sizes differ");
  for (Index r : rows)
    if (r < 0 || r >= X.rows()) throw ValidationError("row index out of range");
}

Matrix standardized_columns(const Matrix& Z) {
  const Index T = Z.rows();
  if (T < 2) throw ValidationError("need at least two observations");
  Matrix C = Z.rowwise() - Z.colwise().mean();
  for (Index c = 0; c < C.cols(); ++c) {
    const double ss = C.col(c).squaredNorm();
    if (!(ss > 0.0)) throw ValidationError("series " + std::to_string(c) + " has zero variance");
    C.col(c) /= std::sqrt(ss);
  }
  return C;
}

}  // namespace

namespace serial {

Matrix sample_bernoulli(const Matrix& H, bool self_loops, std::uint64_t key) {
  check_square(H);
  const Index n = H.rows();
  Matrix X = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (self_loops) X(i, i) = bernoulli_entry(H, key, i, i, n);
    for (Index j = i + 1; j < n; ++j) {
      const double x = bernoulli_entry(H, key, i, j, n);
      X(i, j) = x;
      X(j, i) = x;
    }
  }
  return X;
}

Vector column_sums(const Matrix& X) {
  Vector s(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < X.rows(); ++i) acc += X(i, j);
    s(j) = acc;
  }
  return s;
}

Matrix residual_rows(const Matrix& X, const Spectrum& spec, Index K0, const NodeSet& rows) {
  check_residual_args(X, spec, K0, rows);
  const Index n = X.rows();
  Matrix R(static_cast<Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    for (Index l = 0; l < n; ++l) {
      double low_rank = 0.0;
      for (Index k = 0; k < K0; ++k) low_rank += spec.values(k) * spec.vectors(i, k) * spec.vectors(l, k);
      R(static_cast<Index>(r), l) = X(i, l) - low_rank;
    }
  }
  return R;
}

Matrix pearson(const Matrix& Z) {
  const Matrix C = standardized_columns(Z);
  const Index n = C.cols();
  Matrix R(n, n);
  for (Index a = 0; a < n; ++a) {
    R(a, a) = 1.0;
    for (Index b = a + 1; b < n; ++b) {
      double acc = 0.0;
      for (Index t = 0; t < C.rows(); ++t) acc += C(t, a) * C(t, b);
      R(a, b) = acc;
      R(b, a) = acc;
    }
  }
  return R;
}

}  // namespace serial

namespace omp {

Matrix sample_bernoulli(const Matrix& H, bool self_loops, std::uint64_t key) {
  check_square(H);
  const Index n = H.rows();
  Matrix X = Matrix::Zero(n, n);
  // Column j of the result is owned by one thread; entries (j, i) for i < j
  // are written from the upper-triangle draw of row i.
#pragma omp parallel for schedule(dynamic, 16)
  for (Index j = 0; j < n; ++j) {
    if (self_loops) X(j, j) = bernoulli_entry(H, key, j, j, n);
    for (Index i = 0; i < j; ++i) X(i, j) = bernoulli_entry(H, key, i, j, n);
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) X(i, j) = X(j, i);
  return X;
}

Vector column_sums(const Matrix& X) {
  Vector s(X.cols());
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < X.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < X.rows(); ++i) acc += X(i, j);
    s(j) = acc;
  }
  return s;
}

Matrix residual_rows(const Matrix& X, const Spectrum& spec, Index K0, const NodeSet& rows) {
  check_residual_args(X, spec, K0, rows);
  const Index n = X.rows();
  const Index nr = static_cast<Index>(rows.size());
  Matrix R(nr, n);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index r = 0; r < nr; ++r) {
    for (Index l = 0; l < n; ++l) {
      const Index i = rows[static_cast<std::size_t>(r)];
      double low_rank = 0.0;
      for (Index k = 0; k < K0; ++k) low_rank += spec.values(k) * spec.vectors(i, k) * spec.vectors(l, k);
      R(r, l) = X(i, l) - low_rank;
    }
  }
  return R;
}

Matrix pearson(const Matrix& Z) {
  const Matrix C = standardized_columns(Z);
  const Index n = C.cols();
  Matrix R(n, n);
#pragma omp parallel for schedule(dynamic, 4)
  for (Index a = 0; a < n; ++a) {
    R(a, a) = 1.0;
    for (Index b = a + 1; b < n; ++b) {
      double acc = 0.0;
      for (Index t = 0; t < C.rows(); ++t) acc += C(t, a) * C(t, b);
      R(a, b) = acc;
      R(b, a) = acc;
    }
  }
  return R;
}

}  // namespace omp

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n < 1) throw ValidationError("thread count must be >= 1");
  omp_set_num_threads(n);
}

}  // namespace simplerc::kernels
