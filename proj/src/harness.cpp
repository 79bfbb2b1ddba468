#include "simplerc/harness.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <omp.h>

#include "simplerc/distributions.hpp"
#include "simplerc/error.hpp"
#include "simplerc/rng.hpp"
#include "simplerc/spectral.hpp"

namespace simplerc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool degree_corrected(int example) { return example == 2 || example == 4; }

std::string fmt(double x, int digits = 6) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

struct RepOutcome {
  std::vector<double> stat;
  std::vector<std::vector<double>> pairs;
  std::vector<char> reject;
  std::vector<std::string> error;
  Index k0_hat = 0;
};

}  // namespace

double SimConfig::signal() const { return degree_corrected(example) ? params.r * params.r : params.theta; }

SimConfig build_sim_config(int example, const SimOverrides& o) {
  if (example < 1 || example > 4) throw ValidationError("example must be 1, 2, 3 or 4");
  SimConfig c;
  c.example = example;
  c.params.example = example;
  c.variant = degree_corrected(example) ? Variant::ratio : Variant::T;
  if (o.n) c.params.n = *o.n;
  if (o.n0) c.params.n0 = *o.n0;
  if (o.n && !o.n0) c.params.n0 = *o.n / 10;
  if (o.rho) c.params.rho = *o.rho;
  if (o.delta) {
    if (example <= 2 && *o.delta != 0.0) throw ValidationError("delta applies to examples 3 and 4 only");
    c.params.delta = *o.delta;
  }
  if (o.theta) {
    if (!(*o.theta > 0.0 && *o.theta <= 1.0)) throw ValidationError("signal parameter must lie in (0, 1]");
    if (degree_corrected(example)) c.params.r = std::sqrt(*o.theta);
    else c.params.theta = *o.theta;
  }
  if (o.m) c.m = *o.m;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.k0_values) c.k0_values = *o.k0_values;
  if (o.variant) {
    if (*o.variant != c.variant)
      throw ValidationError(std::string("example ") + std::to_string(example) + " uses variant " +
                            to_string(c.variant));
  }
  if (o.scope) c.scope = *o.scope;
  if (o.reps) c.reps = *o.reps;
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.seed = *o.seed;

  if (c.reps < 1) throw ValidationError("reps must be positive");
  if (c.workers < 1) throw ValidationError("workers must be positive");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (c.m < 2) throw ValidationError("group size m must be at least 2");
  for (Index k : c.k0_values) {
    if (k < 1 || k > c.params.K) throw ValidationError("K0 values must lie in [1, K]");
    if (c.variant == Variant::ratio && k < 2) throw ValidationError("the ratio variant needs K0 >= 2");
  }
  c.params.degree_seed = rng::derive(c.seed, rng::Stream::degrees);
  (void)preset_model(c.params);  // validates the layout
  const Index group_size = (c.params.n - c.params.K * c.params.n0) / 4;
  const Index need = example >= 3 ? (c.m + 1) / 2 : c.m;
  if (need > group_size) throw ValidationError("m exceeds the size of the mixed profile group");
  return c;
}

NodeSet sim_group(const SimConfig& c) {
  const NodeSet a1 = preset_mixed_nodes(c.params, 1);
  NodeSet out;
  if (c.example <= 2) {
    out.assign(a1.begin(), a1.begin() + c.m);
    return out;
  }
  const NodeSet a2 = preset_mixed_nodes(c.params, 2);
  const Index half = c.m / 2;
  out.assign(a1.begin(), a1.begin() + half);
  out.insert(out.end(), a2.begin(), a2.begin() + (c.m - half));
  return out;
}

NetworkModel sim_model(const SimConfig& c) { return preset_model(c.params); }

std::pair<double, double> wilson_interval(int successes, int trials) {
  if (trials <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double n = trials;
  const double p = successes / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

SimSummary monte_carlo(const SimConfig& config) {
  const NetworkModel model = sim_model(config);
  const Matrix H = mean_matrix(model);
  const NodeSet group = sim_group(config);
  const Index n = H.rows();
  const K0Rule rule = config.scope == Scope::pair ? K0Rule::pair : K0Rule::group;
  const bool data_driven = config.k0_values.empty();
  const std::size_t cells = data_driven ? 1 : config.k0_values.size();
  Index max_k0 = 1;
  for (Index k : config.k0_values) max_k0 = std::max(max_k0, k);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps));
  set_blas_threads(1);
  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(config.workers);

#pragma omp parallel for schedule(dynamic, 1)
  for (int rep = 0; rep < config.reps; ++rep) {
    RepOutcome& out = outcomes[static_cast<std::size_t>(rep)];
    out.stat.assign(cells, kNaN);
    out.pairs.assign(cells, {});
    out.reject.assign(cells, 0);
    out.error.assign(cells, {});
    const std::uint64_t rep_seed = rng::derive(config.seed, rng::Stream::replicate, static_cast<std::uint64_t>(rep));
    try {
      const AdjacencyMatrix adj = sample_adjacency(H, model.self_loops, rep_seed);
      const DegreeScale ds = max_degree_q(adj);
      const double thr = k0_threshold(ds.q, n, rule);
      const Spectrum spec = leading_spectrum(adj, max_k0, thr);
      Index k0_hat = 0;
      while (k0_hat < spec.values.size() && spec.values(k0_hat) != 0.0 && std::fabs(spec.values(k0_hat)) >= thr) ++k0_hat;
      out.k0_hat = k0_hat;
      Spectrum work = spec;
      if (data_driven && k0_hat > work.vector_count()) work = leading_spectrum(adj, k0_hat, thr);

      CouplingPlan plan;
      if (config.scope == Scope::pair) plan.pairs = {{group[0], group[1]}};
      else plan = random_coupling(group, rep_seed);
      const Index m_eff = 2 * static_cast<Index>(plan.pairs.size());

      for (std::size_t c = 0; c < cells; ++c) {
        try {
          const Index K0 = data_driven ? k0_hat : config.k0_values[c];
          if (K0 < 1) throw NoSignalError("no eigenvalue reaches the K0 threshold");
          std::vector<double> pv;
          const double stat = group_statistic(adj, work, plan, K0, config.variant, &pv);
          TestReport r;
          r.variant = config.variant;
          r.scope = config.scope;
          r.K0 = K0;
          r.m = m_eff;
          r.alpha = config.alpha;
          r.statistic = stat;
          calibrate(r);
          out.stat[c] = stat;
          out.pairs[c] = std::move(pv);
          out.reject[c] = r.reject ? 1 : 0;
        } catch (const Error& e) {
          out.error[c] = e.what();
        }
      }
    } catch (const Error& e) {
      for (auto& msg : out.error) msg = e.what();
    }
  }
  omp_set_num_threads(saved_threads);

  SimSummary summary;
  summary.config = config;
  for (std::size_t c = 0; c < cells; ++c) {
    CellSummary cell;
    cell.K0 = data_driven ? 0 : config.k0_values[c];
    cell.reps = config.reps;
    if (cell.K0 > 0) {
      cell.df = degrees_of_freedom(cell.K0, config.variant);
      const Index m_eff = config.scope == Scope::pair ? 2 : 2 * (static_cast<Index>(group.size()) / 2);
      if (config.scope == Scope::group && group_calibration(m_eff) == Calibration::gumbel)
        cell.b_m = gumbel_centering(m_eff, cell.df);
    }
    for (const RepOutcome& out : outcomes) {
      cell.statistics.push_back(out.stat[c]);
      cell.pair_statistics.insert(cell.pair_statistics.end(), out.pairs[c].begin(), out.pairs[c].end());
      cell.rejects += out.reject[c];
      if (!out.error[c].empty()) {
        ++cell.failures;
        if (cell.errors.size() < 5) cell.errors.push_back(out.error[c]);
      }
    }
    cell.rate = static_cast<double>(cell.rejects) / static_cast<double>(cell.reps);
    std::tie(cell.ci_low, cell.ci_high) = wilson_interval(cell.rejects, cell.reps);
    summary.cells.push_back(std::move(cell));
  }
  for (const RepOutcome& out : outcomes) ++summary.k0_tally[out.k0_hat];
  return summary;
}

std::string size_power_csv(const std::vector<SimSummary>& runs) {
  std::ostringstream os;
  os << "example,n,K,n0,signal,rho,delta,m,K0,variant,scope,alpha,reps,seed,rejects,failures,rate,ci_low,ci_high\n";
  for (const auto& run : runs) {
    const SimConfig& c = run.config;
    for (const auto& cell : run.cells) {
      os << c.example << ',' << c.params.n << ',' << c.params.K << ',' << c.params.n0 << ',' << fmt(c.signal(), 4)
         << ',' << fmt(c.params.rho, 4) << ',' << fmt(c.params.delta, 4) << ',' << c.m << ','
         << (cell.K0 > 0 ? std::to_string(cell.K0) : std::string("auto")) << ',' << to_string(c.variant) << ','
         << (c.scope == Scope::pair ? "pair" : "group") << ',' << fmt(c.alpha, 4) << ',' << c.reps << ',' << c.seed
         << ',' << cell.rejects << ',' << cell.failures << ',' << fmt(cell.rate, 6) << ',' << fmt(cell.ci_low, 6)
         << ',' << fmt(cell.ci_high, 6) << '\n';
    }
  }
  return os.str();
}

std::string ecdf_csv(const SimSummary& run, int grid_points) {
  if (grid_points < 2) throw ValidationError("ECDF grid needs at least two points");
  std::ostringstream os;
  os << "K0,kind,x,empirical,theoretical\n";
  auto emit = [&](const std::string& k0, const char* kind, std::vector<double> xs, auto theory) {
    xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return std::isnan(x); }), xs.end());
    if (xs.empty()) return;
    std::sort(xs.begin(), xs.end());
    const double lo = xs.front(), hi = xs.back();
    for (int g = 0; g < grid_points; ++g) {
      const double x = lo + (hi - lo) * g / (grid_points - 1);
      const auto count = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
      os << k0 << ',' << kind << ',' << fmt(x, 6) << ','
         << fmt(static_cast<double>(count) / static_cast<double>(xs.size()), 6) << ',' << fmt(theory(x), 6) << '\n';
    }
  };
  for (const auto& cell : run.cells) {
    if (cell.K0 < 1) continue;
    const std::string k0 = std::to_string(cell.K0);
    const int df = cell.df;
    emit(k0, "pair", cell.pair_statistics, [df](double x) { return dist::chi2_cdf(x, df); });
    if (cell.b_m) {
      std::vector<double> centred;
      for (double t : cell.statistics) centred.push_back(0.5 * (t - *cell.b_m));
      emit(k0, "group_centred", centred, [](double x) { return dist::gumbel_cdf(x); });
    }
  }
  return os.str();
}

std::string k0_tally_csv(const SimSummary& run) {
  std::ostringstream os;
  os << "rule,k0,count\n";
  const char* rule = run.config.scope == Scope::pair ? "pair" : "group";
  for (const auto& [k, count] : run.k0_tally) os << rule << ',' << k << ',' << count << '\n';
  return os.str();
}

}  // namespace simplerc
