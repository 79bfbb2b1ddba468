#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "simplerc/covariance.hpp"
#include "simplerc/spectral.hpp"
#include "simplerc/types.hpp"

namespace simplerc {

/// T: eigenvector differences, df = K0. Ratio: eigenvector ratios against the
/// leading eigenvector (degree heterogeneity), df = K0 - 1.
enum class Variant { T, ratio };
enum class Scope { pair, group };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct CouplingPlan {
  std::vector<std::pair<Index, Index>> pairs;
  std::uint64_t seed = 0;
  std::optional<Index> dropped;
};

/// Uniform random perfect matching of M (one node dropped when |M| is odd).
CouplingPlan random_coupling(const NodeSet& group, std::uint64_t seed);

struct QuadraticForm {
  double value = 0.0;
  bool pseudo_inverse = false;
  double condition = 0.0;
};

/// x' S^-1 x under the inversion policy: LDLT while cond(S) <= 1e12, else a
/// pseudo-inverse with relative cutoff 1e-10. Throws SingularCovarianceError
/// if S has no positive eigenvalue.
QuadraticForm covariance_quadratic(const Matrix& S, const Vector& x);

/// The test vector for (i, j): V_K0(i) - V_K0(j) or Y_i - Y_j.
Vector pair_difference(const Spectrum& spec, Index i, Index j, Index K0, Variant variant);

double pair_statistic(const Spectrum& spec, const CovarianceEstimate& sigma, Index i, Index j, Index K0,
                      Variant variant, std::vector<std::string>* warnings = nullptr);

/// Plug-in covariance for each coupled pair, then the maximum statistic.
/// `pair_values`, when given, receives the statistic of every pair in order.
double group_statistic(const AdjacencyMatrix& adj, const Spectrum& spec, const CouplingPlan& plan, Index K0,
                       Variant variant, std::vector<double>* pair_values = nullptr,
                       std::vector<std::string>* warnings = nullptr);

/// Maximum of precomputed pair statistics.
double group_statistic(const std::vector<double>& pair_values);

int degrees_of_freedom(Index K0, Variant variant);

double gumbel_centering(Index m, Index K_eff);
double pair_pvalue(double stat, int df);
double group_pvalue(double stat, Index m, Index K_eff);
/// 1 - F_df(stat)^(m/2): the exact law of a maximum of m/2 independent chi-squares.
double max_chi2_pvalue(double stat, Index m, int df);

enum class Calibration { chi2, gumbel, max_chi2 };

/// Gumbel for m >= 6, the max-of-chi-square law below that.
Calibration group_calibration(Index m);
double critical_value(Calibration cal, double alpha, Index m, int df);

struct TestReport {
  Variant variant = Variant::T;
  Scope scope = Scope::pair;
  double statistic = 0.0;
  Index K0 = 0;
  bool k0_estimated = true;
  double k0_threshold = 0.0;
  Index m = 2;
  int df = 0;
  std::optional<double> b_m;
  Calibration calibration = Calibration::chi2;
  double critical = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  NodeSet nodes;
  std::optional<CouplingPlan> coupling;
  std::vector<double> pair_statistics;
  std::optional<Index> subsample;
  std::vector<std::string> warnings;
};

struct TestOptions {
  double alpha = 0.05;
  Variant variant = Variant::T;
  std::optional<Index> k0_override;
  std::optional<double> loglog_multiplier;
  /// Experimental: test a uniformly drawn subgroup of this size.
  std::optional<Index> subsample;
};

TestReport run_pair_test(const AdjacencyMatrix& adj, Index i, Index j, const TestOptions& options);
TestReport run_group_test(const AdjacencyMatrix& adj, const NodeSet& group, std::uint64_t seed,
                          const TestOptions& options);

/// Fill calibration fields (df, b_m, critical value, p-value, decision) of a
/// report whose statistic, scope, K0, m and variant are already set.
void calibrate(TestReport& report);

/// Deterministic JSON with node labels shifted by `index_base`.
std::string report_to_json(const TestReport& report, int index_base = 1);

}  // namespace simplerc
