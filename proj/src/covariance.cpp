#include "simplerc/covariance.hpp"

#include <cmath>
#include <string>

#include "simplerc/error.hpp"
#include "simplerc/spectral.hpp"

namespace simplerc {
namespace {

void check_pair(Index i, Index j, Index n) {
  if (i == j) throw ValidationError("covariance needs two distinct nodes");
  if (i < 0 || j < 0 || i >= n || j >= n) throw ValidationError("node index out of range");
}

void check_k0(Index K0, Index available, Index minimum) {
  if (K0 < minimum) throw ValidationError("K0 must be at least " + std::to_string(minimum));
  if (K0 > available)
    throw ValidationError("K0 = " + std::to_string(K0) + " exceeds the " + std::to_string(available) +
                          " available eigenpairs");
}

void mirror_upper(Matrix& S) { S.triangularView<Eigen::StrictlyLower>() = S.transpose(); }

}  // namespace

NoiseRows population_noise(const Matrix& H, Index i, Index j, bool self_loops) {
  check_pair(i, j, H.rows());
  NoiseRows r;
  r.i = i;
  r.j = j;
  r.si = (H.row(i).array() * (1.0 - H.row(i).array())).transpose();
  r.sj = (H.row(j).array() * (1.0 - H.row(j).array())).transpose();
  if (!self_loops) {
    r.si(i) = 0.0;
    r.sj(j) = 0.0;
  }
  return r;
}

NoiseRows plugin_noise(const Matrix& residual, Index i, Index j, bool self_loops) {
  check_pair(i, j, residual.rows());
  NoiseRows r;
  r.i = i;
  r.j = j;
  r.si = residual.row(i).array().square().transpose();
  r.sj = residual.row(j).array().square().transpose();
  if (!self_loops) {
    r.si(i) = 0.0;
    r.sj(j) = 0.0;
  }
  return r;
}

NoiseRows plugin_noise(const AdjacencyMatrix& adj, const Spectrum& spec, Index K0, Index i, Index j) {
  check_pair(i, j, adj.n());
  check_k0(K0, spec.vector_count(), 1);
  const Matrix R = residual_rows(adj, spec, K0, {i, j});
  NoiseRows r;
  r.i = i;
  r.j = j;
  r.si = R.row(0).array().square().transpose();
  r.sj = R.row(1).array().square().transpose();
  if (!adj.self_loops) {
    r.si(i) = 0.0;
    r.sj(j) = 0.0;
  }
  return r;
}

CovarianceEstimate sigma_pair(const Vector& d, const Matrix& V, const NoiseRows& noise, Index K0,
                              Provenance provenance) {
  const Index i = noise.i, j = noise.j;
  check_pair(i, j, V.rows());
  check_k0(K0, std::min<Index>(V.cols(), d.size()), 1);
  const auto Vk = V.leftCols(K0);
  const Vector s = noise.si + noise.sj;
  const double sij = noise.sij();

  CovarianceEstimate est;
  est.provenance = provenance;
  est.i = i;
  est.j = j;
  est.K0 = K0;
  est.S.resize(K0, K0);
  for (Index a = 0; a < K0; ++a) {
    for (Index b = a; b < K0; ++b) {
      const double full = (s.array() * Vk.col(a).array() * Vk.col(b).array()).sum();
      const double cross = sij * (Vk(i, a) * Vk(j, b) + Vk(j, a) * Vk(i, b));
      est.S(a, b) = (full - cross) / (d(a) * d(b));
    }
  }
  mirror_upper(est.S);
  return est;
}

CovarianceEstimate sigma_ratio(const Vector& t, const Matrix& V, const NoiseRows& noise, Index K0,
                               Provenance provenance) {
  const Index i = noise.i, j = noise.j;
  const Index n = V.rows();
  check_pair(i, j, n);
  check_k0(K0, std::min<Index>(V.cols(), t.size()), 2);
  const double guard = ratio_guard(V);
  if (std::fabs(V(i, 0)) < guard || std::fabs(V(j, 0)) < guard)
    throw NearSingularRatioError("leading eigenvector entry at node " +
                                 std::to_string(std::fabs(V(i, 0)) < guard ? i : j) +
                                 " is too small for the ratio covariance");
  const Index dim = K0 - 1;
  const double v1i = V(i, 0), v1j = V(j, 0);

  // A.col(a)(l) and B.col(a)(l) are the coefficients of W_il and W_jl in f_{a+2}.
  Matrix A(n, dim), B(n, dim);
  for (Index a = 0; a < dim; ++a) {
    const Index k = a + 1;
    A.col(a) = V.col(k) / (t(k) * v1i) - (V(i, k) / (t(0) * v1i * v1i)) * V.col(0);
    B.col(a) = V.col(k) / (t(k) * v1j) - (V(j, k) / (t(0) * v1j * v1j)) * V.col(0);
  }
  Vector wi = noise.si, wj = noise.sj;
  wi(j) = 0.0;  // l = j enters through the shared W_ij term
  wj(i) = 0.0;
  const Vector shared = A.row(j).transpose() - B.row(i).transpose();
  const double sij = noise.sij();

  CovarianceEstimate est;
  est.provenance = provenance;
  est.ratio = true;
  est.i = i;
  est.j = j;
  est.K0 = K0;
  est.S.resize(dim, dim);
  for (Index a = 0; a < dim; ++a) {
    for (Index b = a; b < dim; ++b) {
      const double si_part = (wi.array() * A.col(a).array() * A.col(b).array()).sum();
      const double sj_part = (wj.array() * B.col(a).array() * B.col(b).array()).sum();
      est.S(a, b) = si_part + sj_part + sij * shared(a) * shared(b);
    }
  }
  mirror_upper(est.S);
  return est;
}

CovarianceEstimate sigma_pair(const AdjacencyMatrix& adj, const Spectrum& spec, Index i, Index j, Index K0) {
  return sigma_pair(spec.values, spec.vectors, plugin_noise(adj, spec, K0, i, j), K0, Provenance::plugin);
}

CovarianceEstimate sigma_ratio(const AdjacencyMatrix& adj, const Spectrum& spec, Index i, Index j, Index K0) {
  check_k0(K0, spec.vector_count(), 2);
  return sigma_ratio(spec.values, spec.vectors, plugin_noise(adj, spec, K0, i, j), K0, Provenance::plugin);
}

double ratio_guard(const Matrix& V) {
  if (V.cols() < 1) throw ValidationError("no leading eigenvector");
  return 1e-8 * V.col(0).cwiseAbs().maxCoeff();
}

Vector ratio_vector(const Matrix& V, Index i, Index K0) {
  if (i < 0 || i >= V.rows()) throw ValidationError("node index out of range");
  if (K0 < 1) throw ValidationError("K0 must be at least 1");
  if (K0 > V.cols()) throw ValidationError("K0 exceeds the available eigenvectors");
  Vector y(K0 - 1);
  if (K0 == 1) return y;
  const double guard = ratio_guard(V);
  const double den = V(i, 0);
  for (Index k = 1; k < K0; ++k) {
    const double num = V(i, k);
    if (std::fabs(den) < guard || den == 0.0) {
      if (std::fabs(num) < guard || num == 0.0) {
        y(k - 1) = 1.0;
        continue;
      }
      throw NearSingularRatioError("v_1(" + std::to_string(i) + ") is below the ratio guard while v_" +
                                   std::to_string(k + 1) + " is not");
    }
    y(k - 1) = num / den;
  }
  return y;
}

Vector ratio_vector(const Spectrum& spec, Index i, Index K0) { return ratio_vector(spec.vectors, i, K0); }

}  // namespace simplerc
