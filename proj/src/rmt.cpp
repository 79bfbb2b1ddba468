#include "simplerc/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "simplerc/error.hpp"
#include "simplerc/spectral.hpp"

namespace simplerc::rmt {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

double qve_residual(const Matrix& S, const Vector& M, double z) {
  const Vector SM = S * M;
  return (M.cwiseInverse().array() + z + SM.array()).abs().maxCoeff();
}

}  // namespace

double support_scale(const Matrix& S) {
  if (S.size() == 0) return 0.0;
  return S.rowwise().sum().maxCoeff();
}

QveSolution qve_solve(const Matrix& S, double z, double tol, int max_iter, double margin, const Vector* warm_start) {
  if (S.rows() != S.cols()) throw ValidationError("variance matrix must be square");
  if ((S.array() < 0.0).any()) throw ValidationError("variances must be nonnegative");
  const double edge = 2.0 * std::sqrt(support_scale(S));
  if (!(std::fabs(z) > edge + margin))
    throw ValidationError("z = " + std::to_string(z) + " is within the support margin (edge " +
                          std::to_string(edge) + ")");
  QveSolution sol;
  sol.z = z;
  sol.M = warm_start && warm_start->size() == S.rows() ? *warm_start : Vector::Constant(S.rows(), -1.0 / z);
  for (int it = 1; it <= max_iter; ++it) {
    const Vector next = (-z - (S * sol.M).array()).inverse().matrix();
    const double step = (next - sol.M).cwiseAbs().maxCoeff();
    sol.M = next;
    sol.iterations = it;
    if (step <= std::max(tol * 1e-2, 8.0 * std::numeric_limits<double>::epsilon() * sol.M.cwiseAbs().maxCoeff()))
      break;
  }
  sol.residual = S.rows() ? qve_residual(S, sol.M, z) : 0.0;
  if (!(sol.residual < tol))
    throw ConvergenceError("QVE iteration did not converge at z = " + std::to_string(z) + " (residual " +
                           std::to_string(sol.residual) + ")");
  return sol;
}

double model_theta(const NetworkModel& model) {
  if (model.degrees.kind == DegreeProfile::Kind::scalar) return model.degrees.theta;
  return model.degrees.values.squaredNorm() / static_cast<double>(model.degrees.values.size());
}

double model_q(const NetworkModel& model) { return std::sqrt(static_cast<double>(model.n()) * model_theta(model)); }

Matrix variance_profile(const Matrix& H, double q, bool self_loops) {
  if (!(q > 0.0)) throw ValidationError("q must be positive");
  Matrix S = (H.array() * (1.0 - H.array())).matrix() / (q * q);
  if (!self_loops) S.diagonal().setZero();
  return S;
}

double t_k_solve(const Vector& d, const Matrix& V, const Matrix& S, Index k, double tol) {
  const Index K = d.size();
  if (k < 0 || k >= K) throw ValidationError("spike index out of range");
  if (V.cols() < K || V.rows() != S.rows()) throw ValidationError("eigenvector and variance sizes differ");
  const double dk = d(k);
  const double adk = std::fabs(dk);
  if (!(adk > 0.0)) throw ValidationError("spike must be nonzero");

  double ratio = 2.0;
  for (Index j = 0; j < K; ++j) {
    if (j == k) continue;
    const double a = std::fabs(d(j));
    ratio = std::min(ratio, std::max(a, adk) / std::min(a, adk));
  }
  const double eps0 = std::clamp(ratio - 1.0, 1e-6, 1.0);
  const double edge = 2.0 * std::sqrt(support_scale(S));
  double lo = std::max(adk / (1.0 + 0.5 * eps0), edge * (1.0 + 1e-6) + 1e-9);
  double hi = (1.0 + 0.5 * eps0) * adk;
  if (!(lo < hi)) throw ConvergenceError("interval I_k lies inside the noise support");

  Matrix Vm(V.rows(), K - 1);
  Vector Dm(K - 1);
  for (Index j = 0, c = 0; j < K; ++j) {
    if (j == k) continue;
    Vm.col(c) = V.col(j);
    Dm(c++) = d(j);
  }
  const Vector vk = V.col(k);
  Vector warm;
  auto f = [&](double mag) {
    const double x = std::copysign(mag, dk);
    const QveSolution q = qve_solve(S, x, 1e-13, 10000, 0.0, warm.size() ? &warm : nullptr);
    warm = q.M;
    const Vector Uvk = q.M.cwiseProduct(vk);
    double val = 1.0 + dk * vk.dot(Uvk);
    if (K > 1) {
      const Matrix UVm = q.M.asDiagonal() * Vm;
      Matrix inner = Vm.transpose() * UVm;
      inner.diagonal() += Dm.cwiseInverse();
      const Vector b = Vm.transpose() * Uvk;
      val -= dk * b.dot(inner.partialPivLu().solve(b));
    }
    return val;
  };

  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return std::copysign(lo, dk);
  if (fhi == 0.0) return std::copysign(hi, dk);
  if ((flo < 0.0) == (fhi < 0.0))
    throw ConvergenceError("no sign change of the spiked-location equation in I_k");
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return std::copysign(mid, dk);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return std::copysign(0.5 * (lo + hi), dk);
}

double tail_energy(const Vector& d, const Matrix& V, Index K0, double theta) {
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  if (K0 < 0) throw ValidationError("K0 must be nonnegative");
  const Index K = d.size();
  if (K0 >= K) return 0.0;
  const auto Vt = V.middleCols(K0, K - K0);
  const Matrix E = Vt * d.segment(K0, K - K0).asDiagonal() * Vt.transpose();
  return E.cwiseAbs().maxCoeff() / theta;
}

ExpansionDiagnostics eigen_expansion_residuals(const NetworkModel& model, const std::vector<std::uint64_t>& seeds,
                                               Index K0) {
  const Matrix H = mean_matrix(model);
  const Index K = model.K();
  if (K0 < 1 || K0 > K) throw ValidationError("K0 must lie in [1, K]");
  const Spectrum pop = population_spectrum(H, K);

  ExpansionDiagnostics out;
  out.n = model.n();
  out.theta = model_theta(model);
  out.K = K;
  out.K0 = K0;
  const double noise = std::sqrt(out.n * out.theta * std::log(static_cast<double>(out.n)));
  out.spike_ratio = std::fabs(pop.values(K0 - 1)) / noise;
  out.spiked = out.spike_ratio >= 1.0;

  std::vector<std::vector<double>> gaps(static_cast<std::size_t>(K0)), res(static_cast<std::size_t>(K0));
  for (std::uint64_t seed : seeds) {
    const AdjacencyMatrix adj = sample_adjacency(H, model.self_loops, seed);
    const Spectrum emp = SymmetricEigenSolver::lanczos(adj.X, K0);
    const Matrix W = adj.X - H;
    double seed_max = 0.0;
    for (Index k = 0; k < K0; ++k) {
      Vector vhat = emp.vectors.col(k);
      const auto v = pop.vectors.col(k);
      if (vhat.dot(v) < 0.0) vhat = -vhat;
      const Vector r = vhat - v - (W * v) / emp.values(k);
      const double rmax = r.cwiseAbs().maxCoeff();
      res[static_cast<std::size_t>(k)].push_back(rmax);
      gaps[static_cast<std::size_t>(k)].push_back(std::fabs(emp.values(k) - pop.values(k)));
      seed_max = std::max(seed_max, rmax);
    }
    out.seed_residuals.push_back(seed_max);
  }
  for (Index k = 0; k < K0; ++k) {
    out.eigen_gap_median.push_back(median(gaps[static_cast<std::size_t>(k)]));
    out.residual_median.push_back(median(res[static_cast<std::size_t>(k)]));
  }
  out.median_residual = median(out.seed_residuals);
  return out;
}

std::vector<LawGapRow> entrywise_law_gap(const NetworkModel& model, const std::vector<double>& z_grid,
                                         const std::vector<std::uint64_t>& seeds) {
  const Matrix H = mean_matrix(model);
  const double q = model_q(model);
  const Matrix S = variance_profile(H, q, model.self_loops);
  const Index n = H.rows();
  std::vector<LawGapRow> rows;
  std::vector<QveSolution> qve;
  for (double z : z_grid) qve.push_back(qve_solve(S, z));

  std::vector<std::vector<double>> gaps(z_grid.size()), offs(z_grid.size());
  for (std::uint64_t seed : seeds) {
    const AdjacencyMatrix adj = sample_adjacency(H, model.self_loops, seed);
    const Matrix W = (adj.X - H) / q;
    for (std::size_t a = 0; a < z_grid.size(); ++a) {
      Matrix A = W;
      A.diagonal().array() -= z_grid[a];
      const Matrix G = A.ldlt().solve(Matrix::Identity(n, n));
      gaps[a].push_back((G.diagonal() - qve[a].M).cwiseAbs().maxCoeff());
      Matrix off = G;
      off.diagonal().setZero();
      offs[a].push_back(off.cwiseAbs().maxCoeff());
    }
  }
  for (std::size_t a = 0; a < z_grid.size(); ++a) {
    LawGapRow row;
    row.z = z_grid[a];
    row.median_gap = median(gaps[a]);
    row.median_offdiag = median(offs[a]);
    row.scale = 1.0 / (q * z_grid[a] * z_grid[a]);
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "n,theta,k,metric,value\n";
  os.setf(std::ios::fixed);
  for (const auto& r : rows) {
    os.precision(4);
    os << r.n << ',' << r.theta << ',' << r.k << ',' << r.metric << ',';
    os.precision(12);
    os << std::scientific << r.value << std::fixed << '\n';
  }
  return os.str();
}

}  // namespace simplerc::rmt
