#include "simplerc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Sparse>
#include <lapacke.h>

#include "simplerc/error.hpp"
#include "simplerc/kernels.hpp"
#include "simplerc/rng.hpp"

extern "C" void openblas_set_num_threads(int num_threads);

namespace simplerc {
namespace {

constexpr Index kDenseCutoff = 300;

void require_square(const Matrix& A) {
  if (A.rows() != A.cols()) throw ValidationError("matrix must be square");
}

void require_symmetric(const Matrix& A) {
  require_square(A);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("matrix is not symmetric");
}

// Permutation that puts `values` in magnitude order.
std::vector<Index> magnitude_order(const Vector& values) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    const double ma = std::fabs(values(a));
    const double mb = std::fabs(values(b));
    if (ma != mb) return ma > mb;
    if (values(a) != values(b)) return values(a) > values(b);
    return a < b;
  });
  return idx;
}

void check_lapack(lapack_int info, const char* routine) {
  if (info != 0)
    throw NumericalError(std::string(routine) + " failed with info = " + std::to_string(info));
}

class MatVec {
 public:
  explicit MatVec(const Matrix& A) : dense_(A) {
    const double nnz = static_cast<double>((A.array() != 0.0).count());
    sparse_ok_ = nnz < 0.3 * static_cast<double>(A.size());
    if (sparse_ok_) sparse_ = A.sparseView();
  }

  void apply(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y) const {
    if (sparse_ok_) y.noalias() = sparse_ * x;
    else y.noalias() = dense_ * x;
  }

 private:
  const Matrix& dense_;
  bool sparse_ok_ = false;
  Eigen::SparseMatrix<double> sparse_;
};

Vector start_vector(Index n, std::uint64_t salt) {
  Vector v(n);
  const std::uint64_t key = rng::derive(0x6c616e637a6f73ULL, salt);
  for (Index i = 0; i < n; ++i) v(i) = rng::uniform(key, static_cast<std::uint64_t>(i)) - 0.5;
  return v;
}

}  // namespace

void normalize_signs(Matrix& vectors) {
  for (Index k = 0; k < vectors.cols(); ++k) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::fabs(vectors(i, k));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, k) < 0.0) vectors.col(k) *= -1.0;
  }
}

void order_by_magnitude(Vector& values, Matrix& vectors) {
  const auto idx = magnitude_order(values);
  Vector v2(values.size());
  Matrix V2(vectors.rows(), vectors.cols());
  for (std::size_t p = 0; p < idx.size(); ++p) {
    v2(static_cast<Index>(p)) = values(idx[p]);
    if (static_cast<Index>(p) < vectors.cols()) V2.col(static_cast<Index>(p)) = vectors.col(idx[p]);
  }
  values = std::move(v2);
  vectors = std::move(V2);
  normalize_signs(vectors);
}

Spectrum SymmetricEigenSolver::full(const Matrix& A) {
  require_symmetric(A);
  const Index n = A.rows();
  Spectrum s;
  if (n == 0) return s;
  Matrix Z = A;
  Vector w(n);
  check_lapack(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), Z.data(),
                              static_cast<lapack_int>(n), w.data()),
               "dsyevd");
  order_by_magnitude(w, Z);
  s.values = std::move(w);
  s.vectors = std::move(Z);
  return s;
}

Spectrum SymmetricEigenSolver::leading(const Matrix& A, Index r) {
  require_symmetric(A);
  const Index n = A.rows();
  if (r < 0 || r > n) throw ValidationError("requested eigenvector count out of range");
  if (n == 0) return {};
  const auto ln = static_cast<lapack_int>(n);

  Matrix Q = A;
  Vector d(n), e(std::max<Index>(n, 1)), tau(std::max<Index>(n - 1, 1));
  check_lapack(LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', ln, Q.data(), ln, d.data(), e.data(), tau.data()),
               "dsytrd");

  Vector w = d;
  Vector e_work = e;
  check_lapack(LAPACKE_dsterf(ln, w.data(), e_work.data()), "dsterf");  // ascending

  const auto order = magnitude_order(w);
  std::vector<Index> chosen(order.begin(), order.begin() + r);
  std::sort(chosen.begin(), chosen.end());

  // MRRR per contiguous run of selected ascending indices.
  Matrix Zt = Matrix::Zero(n, r);
  std::vector<Index> column_of(static_cast<std::size_t>(n), -1);
  Index col = 0;
  for (std::size_t a = 0; a < chosen.size();) {
    std::size_t b = a;
    while (b + 1 < chosen.size() && chosen[b + 1] == chosen[b] + 1) ++b;
    const auto il = static_cast<lapack_int>(chosen[a] + 1);
    const auto iu = static_cast<lapack_int>(chosen[b] + 1);
    const Index count = iu - il + 1;
    Vector dd = d, ee = e;
    Vector wr(n);
    Matrix Zr(n, count);
    std::vector<lapack_int> isuppz(static_cast<std::size_t>(2 * count));
    lapack_int found = 0;
    lapack_logical tryrac = 1;
    check_lapack(LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', ln, dd.data(), ee.data(), 0.0, 0.0, il, iu,
                                &found, wr.data(), Zr.data(), ln, static_cast<lapack_int>(count),
                                isuppz.data(), &tryrac),
                 "dstemr");
    if (found != count) throw NumericalError("dstemr returned fewer eigenvectors than requested");
    for (Index c = 0; c < count; ++c) {
      Zt.col(col) = Zr.col(c);
      column_of[static_cast<std::size_t>(chosen[a] + c)] = col++;
    }
    a = b + 1;
  }

  if (r > 0) {
    check_lapack(LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', ln, static_cast<lapack_int>(r), Q.data(), ln,
                                tau.data(), Zt.data(), ln),
                 "dormtr");
  }

  Spectrum s;
  s.values.resize(n);
  s.vectors.resize(n, r);
  for (std::size_t p = 0; p < order.size(); ++p) {
    s.values(static_cast<Index>(p)) = w(order[p]);
    if (static_cast<Index>(p) < r)
      s.vectors.col(static_cast<Index>(p)) = Zt.col(column_of[static_cast<std::size_t>(order[p])]);
  }
  normalize_signs(s.vectors);
  return s;
}

Spectrum SymmetricEigenSolver::lanczos(const Matrix& A, Index r, double tol) {
  require_symmetric(A);
  const Index n = A.rows();
  if (r < 0 || r > n) throw ValidationError("requested eigenvector count out of range");
  if (n <= kDenseCutoff || 3 * r + 40 >= n) {
    Spectrum s = leading(A, r);
    s.values.conservativeResize(r);
    return s;
  }
  if (r == 0) return Spectrum{Vector(0), Matrix(n, 0)};

  const MatVec op(A);
  const Index min_steps = 2 * r + 20;
  Index cap = std::min(n, min_steps + 40);
  Matrix Q(n, cap);
  std::vector<double> alpha, beta;
  Vector w(n);

  Q.col(0) = start_vector(n, 0);
  Q.col(0).normalize();
  std::uint64_t restarts = 0;

  for (Index j = 0;; ++j) {
    op.apply(Q.col(j), w);
    const double a = Q.col(j).dot(w);
    alpha.push_back(a);
    w -= a * Q.col(j);
    if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * Q.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector h = Q.leftCols(j + 1).transpose() * w;
      w.noalias() -= Q.leftCols(j + 1) * h;
    }
    double b = w.norm();
    const Index m = j + 1;

    const bool breakdown = b <= 1e-13 * std::max(1.0, std::fabs(a));
    if (m == n || (!breakdown && m >= min_steps && (m - min_steps) % 5 == 0)) {
      Eigen::SelfAdjointEigenSolver<Matrix> es;
      Vector diag = Eigen::Map<const Vector>(alpha.data(), m);
      Vector sub = m > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), m - 1)) : Vector(0);
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      Vector theta = es.eigenvalues();
      const auto ord = magnitude_order(theta);
      const double scale = std::max(std::fabs(theta(ord[0])), 1e-300);
      bool done = m == n;
      if (!done) {
        done = true;
        for (Index p = 0; p < r; ++p)
          if (std::fabs(b * es.eigenvectors()(m - 1, ord[static_cast<std::size_t>(p)])) > tol * scale)
            done = false;
      }
      if (done) {
        Spectrum s;
        s.values.resize(r);
        s.vectors.resize(n, r);
        for (Index p = 0; p < r; ++p) {
          const Index c = ord[static_cast<std::size_t>(p)];
          s.values(p) = theta(c);
          s.vectors.col(p) = Q.leftCols(m) * es.eigenvectors().col(c);
          s.vectors.col(p).normalize();
        }
        normalize_signs(s.vectors);
        return s;
      }
    }

    if (m == cap) {
      cap = std::min(n, cap + 40);
      Q.conservativeResize(n, cap);
    }
    if (breakdown) {
      // Invariant subspace: continue from a fresh direction orthogonal to it.
      w = start_vector(n, ++restarts);
      for (int pass = 0; pass < 2; ++pass) {
        const Vector h = Q.leftCols(m).transpose() * w;
        w.noalias() -= Q.leftCols(m) * h;
      }
      Q.col(m) = w.normalized();
      b = 0.0;
    } else {
      Q.col(m) = w / b;
    }
    beta.push_back(b);
  }
}

Spectrum eigendecompose(const AdjacencyMatrix& adj) {
  if (adj.X.rows() != adj.X.cols()) throw ValidationError("adjacency matrix must be square");
  return SymmetricEigenSolver::full(adj.X);
}

Spectrum eigendecompose(const AdjacencyMatrix& adj, Index r) {
  if (adj.X.rows() != adj.X.cols()) throw ValidationError("adjacency matrix must be square");
  return SymmetricEigenSolver::leading(adj.X, r);
}

DegreeScale max_degree_q(const AdjacencyMatrix& adj) {
  DegreeScale s;
  if (adj.X.size() == 0) return s;
  s.q2 = kernels::omp::column_sums(adj.X).maxCoeff();
  s.q = std::sqrt(std::max(0.0, s.q2));
  return s;
}

double k0_threshold(double q, Index n, K0Rule rule, std::optional<double> multiplier) {
  if (n < 3) throw ValidationError("the K0 rule needs n >= 3");
  const double ln = std::log(static_cast<double>(n));
  const double e = rule == K0Rule::pair ? 0.5 : 1.5;
  const double L = multiplier ? *multiplier : std::log(ln);
  return q * std::pow(ln, e) * L;
}

Index estimate_k0(const Spectrum& spec, double q, Index n, K0Rule rule, std::optional<double> multiplier) {
  const double thr = k0_threshold(q, n, rule, multiplier);
  Index k = 0;
  while (k < spec.values.size() && spec.values(k) != 0.0 && std::fabs(spec.values(k)) >= thr) ++k;
  if (k == 0)
    throw NoSignalError("no eigenvalue reaches the K0 threshold " + std::to_string(thr) +
                        " (largest |d| = " +
                        std::to_string(spec.values.size() ? std::fabs(spec.values(0)) : 0.0) + ")");
  return k;
}

Spectrum leading_spectrum(const AdjacencyMatrix& adj, Index min_vectors, double threshold) {
  const Index n = adj.n();
  Index r = std::min(n, std::max<Index>(min_vectors, 4) + 2);
  for (;;) {
    Spectrum s = SymmetricEigenSolver::lanczos(adj.X, r);
    if (r == n || std::fabs(s.values(r - 1)) < threshold) return s;
    r = std::min(n, 2 * r);
  }
}

ResidualMatrix residual_matrix(const AdjacencyMatrix& adj, const Spectrum& spec, Index K0) {
  const Index n = adj.n();
  if (K0 < 1 || K0 > n) throw ValidationError("K0 must lie in [1, n]");
  if (K0 > spec.vector_count()) throw ValidationError("K0 exceeds the eigenvectors in the spectrum");
  const auto V = spec.vectors.leftCols(K0);
  ResidualMatrix R;
  R.K0 = K0;
  R.W = adj.X - V * spec.values.head(K0).asDiagonal() * V.transpose();
  R.W.triangularView<Eigen::StrictlyLower>() = R.W.transpose();
  return R;
}

Matrix residual_rows(const AdjacencyMatrix& adj, const Spectrum& spec, Index K0, const NodeSet& rows) {
  if (K0 < 1 || K0 > adj.n()) throw ValidationError("K0 must lie in [1, n]");
  return kernels::omp::residual_rows(adj.X, spec, K0, rows);
}

std::string spectrum_csv(const Spectrum& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "k,eigenvalue\n";
  for (Index k = 0; k < spec.values.size(); ++k) os << (k + 1) << ',' << spec.values(k) << '\n';
  return os.str();
}

void set_blas_threads(int n) { openblas_set_num_threads(std::max(1, n)); }

}  // namespace simplerc
