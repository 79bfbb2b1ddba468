#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simplerc/model.hpp"
#include "simplerc/types.hpp"

// Desk-scale numerical checks of the random-matrix results behind the tests.
// Functions taking a model work on the rescaled matrix X / q with
// q = sqrt(n * theta) unless stated otherwise.

namespace simplerc::rmt {

struct QveSolution {
  double z = 0.0;
  Vector M;
  double residual = 0.0;
  int iterations = 0;
};

/// Largest row sum of S.
double support_scale(const Matrix& S);

/// Solve 1/M_i = -z - sum_j s_ij M_j for real z with |z| > 2 sqrt(max row sum) + margin.
QveSolution qve_solve(const Matrix& S, double z, double tol = 1e-12, int max_iter = 10000,
                      double margin = 1e-6, const Vector* warm_start = nullptr);

/// Average node degree parameter: theta (MM) or mean of the squared weights (DCMM).
double model_theta(const NetworkModel& model);
/// q = sqrt(n * theta).
double model_q(const NetworkModel& model);

/// s_ij = h_ij (1 - h_ij) / q^2, zero diagonal without self loops.
Matrix variance_profile(const Matrix& H, double q, bool self_loops);

/// Root of the spiked-location equation inside I_k for the k-th (0-based)
/// spike of (d, V) under variance profile S.
double t_k_solve(const Vector& d, const Matrix& V, const Matrix& S, Index k, double tol = 1e-14);

/// theta^-1 max_ij |sum_{k >= K0} d_k v_k(i) v_k(j)| over the spikes after the first K0.
double tail_energy(const Vector& d, const Matrix& V, Index K0, double theta);

struct ExpansionDiagnostics {
  Index n = 0;
  double theta = 0.0;
  Index K = 0;
  Index K0 = 0;
  double spike_ratio = 0.0;  // |d_K0| / sqrt(n theta log n)
  bool spiked = false;
  std::vector<double> eigen_gap_median;      // per k, median |d-hat_k - d_k|
  std::vector<double> residual_median;       // per k, median over seeds of max_i |r_k(i)|
  std::vector<double> seed_residuals;        // per seed, max over k and i
  double median_residual = 0.0;              // median of seed_residuals
};

/// r_k(i) = v-hat_k(i) - v_k(i) - (W v_k)(i) / d-hat_k with v-hat_k aligned to v_k.
/// Unrescaled; one adjacency draw per seed.
ExpansionDiagnostics eigen_expansion_residuals(const NetworkModel& model, const std::vector<std::uint64_t>& seeds,
                                               Index K0);

struct LawGapRow {
  double z = 0.0;
  double median_gap = 0.0;      // max_i |G_ii - M_i|
  double median_offdiag = 0.0;  // max_{i != j} |G_ij|
  double scale = 0.0;           // 1 / (q z^2)
};

std::vector<LawGapRow> entrywise_law_gap(const NetworkModel& model, const std::vector<double>& z_grid,
                                         const std::vector<std::uint64_t>& seeds);

/// Long-format table "n,theta,k,metric,value".
struct SweepRow {
  Index n = 0;
  double theta = 0.0;
  Index k = 0;
  std::string metric;
  double value = 0.0;
};
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace simplerc::rmt
