#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simplerc/inference.hpp"
#include "simplerc/model.hpp"

namespace simplerc {

struct SimConfig {
  int example = 1;
  PresetParams params;
  Index m = 10;
  /// Fixed K0 values evaluated on the same draws; empty means data-driven.
  std::vector<Index> k0_values{3};
  Variant variant = Variant::T;
  Scope scope = Scope::group;
  double alpha = 0.05;
  int reps = 500;
  std::uint64_t seed = 1;
  int workers = 1;

  /// theta for examples 1 and 3, r^2 for examples 2 and 4.
  double signal() const;
};

struct SimOverrides {
  std::optional<Index> n, n0, m;
  std::optional<double> theta;  // theta, or r^2 for the degree-corrected examples
  std::optional<double> rho, delta, alpha;
  std::optional<std::vector<Index>> k0_values;
  std::optional<Variant> variant;
  std::optional<Scope> scope;
  std::optional<int> reps, workers;
  std::optional<std::uint64_t> seed;
};

SimConfig build_sim_config(int example, const SimOverrides& overrides = {});

/// The tested group: m nodes of profile a1 (examples 1, 2) or half a1 and
/// half a2 (examples 3, 4).
NodeSet sim_group(const SimConfig& config);

NetworkModel sim_model(const SimConfig& config);

struct CellSummary {
  Index K0 = 0;  // 0 when data-driven
  int df = 0;
  std::optional<double> b_m;
  int reps = 0;
  int rejects = 0;
  int failures = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> statistics;       // one per replicate (NaN on failure)
  std::vector<double> pair_statistics;  // every coupled pair of every replicate
  std::vector<std::string> errors;
};

struct SimSummary {
  SimConfig config;
  std::vector<CellSummary> cells;
  std::map<Index, int> k0_tally;  // data-driven K0 per replicate, 0 for no signal
};

/// Replicates run on `config.workers` OpenMP threads; the result does not
/// depend on the worker count.
SimSummary monte_carlo(const SimConfig& config);

/// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(int successes, int trials);

std::string size_power_csv(const std::vector<SimSummary>& runs);
std::string ecdf_csv(const SimSummary& run, int grid_points = 512);
std::string k0_tally_csv(const SimSummary& run);

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <typename Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf);

}  // namespace simplerc

#include <algorithm>
#include <cmath>

namespace simplerc {

template <typename Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf) {
  sample.erase(std::remove_if(sample.begin(), sample.end(), [](double x) { return std::isnan(x); }), sample.end());
  if (sample.empty()) return 1.0;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double F = cdf(sample[k]);
    d = std::max({d, F - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - F});
  }
  return d;
}

}  // namespace simplerc
