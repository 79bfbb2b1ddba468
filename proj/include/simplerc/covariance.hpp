#pragma once

#include "simplerc/types.hpp"

// Covariance of the eigenvector-difference vectors for a node pair, in the
// population (oracle) form and the plug-in form built from the residual
// matrix, plus the eigenvector ratio vectors used for degree heterogeneity.

namespace simplerc {

enum class Provenance { population, plugin };

struct CovarianceEstimate {
  Matrix S;
  Provenance provenance = Provenance::plugin;
  bool ratio = false;  // true: (K0-1) x (K0-1) ratio covariance
  Index i = 0;
  Index j = 0;
  Index K0 = 0;

  Index dim() const { return S.rows(); }
};

/// Noise variances along rows i and j: si(l) = var(W_il), sj(l) = var(W_jl).
/// With self loops disabled the self terms si(i) and sj(j) are zero.
struct NoiseRows {
  Index i = 0;
  Index j = 0;
  Vector si;
  Vector sj;

  double sij() const { return si(j); }
};

/// sigma^2_kl = h_kl (1 - h_kl).
NoiseRows population_noise(const Matrix& H, Index i, Index j, bool self_loops);

/// sigma^2_kl estimated by the squared residual entries of X minus its
/// leading K0 spectral component.
NoiseRows plugin_noise(const AdjacencyMatrix& adj, const Spectrum& spec, Index K0, Index i, Index j);

/// Same, from an explicit residual matrix.
NoiseRows plugin_noise(const Matrix& residual, Index i, Index j, bool self_loops);

/// Pair covariance with eigenvalues `d` and eigenvectors `V` (first K0 used).
CovarianceEstimate sigma_pair(const Vector& d, const Matrix& V, const NoiseRows& noise, Index K0,
                              Provenance provenance);

/// Ratio covariance with spiked locations `t` (t_k; the plug-in passes d-hat).
CovarianceEstimate sigma_ratio(const Vector& t, const Matrix& V, const NoiseRows& noise, Index K0,
                               Provenance provenance);

/// Convenience: plug-in estimates straight from the adjacency matrix.
CovarianceEstimate sigma_pair(const AdjacencyMatrix& adj, const Spectrum& spec, Index i, Index j, Index K0);
CovarianceEstimate sigma_ratio(const AdjacencyMatrix& adj, const Spectrum& spec, Index i, Index j, Index K0);

/// Denominator guard: entries of v1 below this magnitude count as zero.
double ratio_guard(const Matrix& V);

/// Y_i(k) = v_k(i) / v_1(i) for k = 2..K0, with 0/0 read as 1.
/// Throws NearSingularRatioError for a tiny denominator over a sizable numerator.
Vector ratio_vector(const Matrix& V, Index i, Index K0);
Vector ratio_vector(const Spectrum& spec, Index i, Index K0);

}  // namespace simplerc
