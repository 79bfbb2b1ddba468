#pragma once

#include <optional>
#include <string>

#include "simplerc/types.hpp"

namespace simplerc {

/// Dense symmetric eigensolvers returning magnitude-ordered spectra.
class SymmetricEigenSolver {
 public:
  /// Every eigenpair (LAPACK divide and conquer).
  static Spectrum full(const Matrix& A);

  /// Every eigenvalue, but only the r leading eigenvectors: one Householder
  /// tridiagonalization, MRRR on the selected index ranges, back-transform.
  static Spectrum leading(const Matrix& A, Index r);

  /// The r leading eigenpairs only, by Lanczos with full reorthogonalization.
  /// `values` has length r. Falls back to `leading` for small matrices.
  static Spectrum lanczos(const Matrix& A, Index r, double tol = 1e-11);
};

/// Put eigenpairs in decreasing magnitude (ties: larger signed value, then
/// lower input position) and fix eigenvector signs.
void order_by_magnitude(Vector& values, Matrix& vectors);
void normalize_signs(Matrix& vectors);

Spectrum eigendecompose(const AdjacencyMatrix& adj);
Spectrum eigendecompose(const AdjacencyMatrix& adj, Index r);

struct DegreeScale {
  double q2 = 0.0;  // max column sum
  double q = 0.0;   // its square root
};
DegreeScale max_degree_q(const AdjacencyMatrix& adj);

enum class K0Rule { pair, group };

/// q * (log n)^e * L with e = 1/2 (pair) or 3/2 (group); L = log log n unless
/// `multiplier` overrides it.
double k0_threshold(double q, Index n, K0Rule rule, std::optional<double> multiplier = std::nullopt);

/// Number of leading eigenvalues at or above the threshold. Throws
/// NoSignalError when none passes.
Index estimate_k0(const Spectrum& spec, double q, Index n, K0Rule rule,
                  std::optional<double> multiplier = std::nullopt);

/// Leading spectrum of X with enough eigenpairs to settle the K0 rule and to
/// supply at least `min_vectors` eigenvectors.
Spectrum leading_spectrum(const AdjacencyMatrix& adj, Index min_vectors, double threshold);

struct ResidualMatrix {
  Matrix W;
  Index K0 = 0;
};

ResidualMatrix residual_matrix(const AdjacencyMatrix& adj, const Spectrum& spec, Index K0);

/// Rows `rows` of the residual matrix without forming all of it.
Matrix residual_rows(const AdjacencyMatrix& adj, const Spectrum& spec, Index K0, const NodeSet& rows);

/// "k,eigenvalue" table, 1-based k.
std::string spectrum_csv(const Spectrum& spec);

/// Pin BLAS/LAPACK to one thread so results do not depend on the schedule.
void set_blas_threads(int n);

}  // namespace simplerc
