#include "simplerc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "simplerc/distributions.hpp"
#include "simplerc/error.hpp"
#include "simplerc/model.hpp"
#include "simplerc/rng.hpp"

namespace simplerc {

std::string to_string(Variant v) { return v == Variant::T ? "T" : "ratio"; }

Variant parse_variant(const std::string& s) {
  if (s == "T" || s == "t") return Variant::T;
  if (s == "ratio" || s == "calT" || s == "R") return Variant::ratio;
  throw ValidationError("unknown variant '" + s + "' (expected T or ratio)");
}

CouplingPlan random_coupling(const NodeSet& group, std::uint64_t seed) {
  if (group.size() < 2) throw ValidationError("coupling needs at least two nodes");
  NodeSet perm = group;
  rng::CounterStream stream(rng::derive(seed, rng::Stream::coupling));
  for (std::size_t k = perm.size() - 1; k > 0; --k) {
    const auto u = static_cast<std::size_t>(stream.next_below(k + 1));
    std::swap(perm[k], perm[u]);
  }
  CouplingPlan plan;
  plan.seed = seed;
  if (perm.size() % 2 == 1) {
    plan.dropped = perm.back();
    perm.pop_back();
  }
  for (std::size_t k = 0; k < perm.size(); k += 2) plan.pairs.emplace_back(perm[k], perm[k + 1]);
  return plan;
}

QuadraticForm covariance_quadratic(const Matrix& S, const Vector& x) {
  if (S.rows() != S.cols() || S.rows() != x.size()) throw ValidationError("covariance and vector sizes differ");
  QuadraticForm out;
  if (S.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const Vector& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  const double lmin = lam.minCoeff();
  if (!(lmax > 0.0) || !std::isfinite(lmax))
    throw SingularCovarianceError("covariance matrix has no positive eigenvalue");
  out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (out.condition <= 1e12) {
    const Eigen::LDLT<Matrix> ldlt(S);
    out.value = x.dot(ldlt.solve(x));
  } else {
    out.pseudo_inverse = true;
    const Vector c = es.eigenvectors().transpose() * x;
    double acc = 0.0;
    for (Index k = 0; k < lam.size(); ++k)
      if (lam(k) > 1e-10 * lmax) acc += c(k) * c(k) / lam(k);
    out.value = acc;
  }
  out.value = std::max(0.0, out.value);
  return out;
}

Vector pair_difference(const Spectrum& spec, Index i, Index j, Index K0, Variant variant) {
  if (variant == Variant::T) {
    if (K0 < 1 || K0 > spec.vector_count()) throw ValidationError("K0 outside the available eigenvectors");
    return (spec.vectors.row(i).head(K0) - spec.vectors.row(j).head(K0)).transpose();
  }
  return ratio_vector(spec, i, K0) - ratio_vector(spec, j, K0);
}

double pair_statistic(const Spectrum& spec, const CovarianceEstimate& sigma, Index i, Index j, Index K0,
                      Variant variant, std::vector<std::string>* warnings) {
  if (i < 0 || j < 0 || i >= spec.n() || j >= spec.n()) throw ValidationError("node index out of range");
  if (i == j) return 0.0;
  if (sigma.K0 != K0 || sigma.ratio != (variant == Variant::ratio))
    throw ValidationError("covariance estimate does not match K0 or variant");
  const Vector x = pair_difference(spec, i, j, K0, variant);
  const QuadraticForm q = covariance_quadratic(sigma.S, x);
  if (q.pseudo_inverse && warnings)
    warnings->push_back("pseudo-inverse used for pair (" + std::to_string(i) + ", " + std::to_string(j) +
                        "), condition number " + std::to_string(q.condition));
  return q.value;
}

double group_statistic(const std::vector<double>& pair_values) {
  if (pair_values.empty()) throw ValidationError("group statistic over an empty coupling");
  return *std::max_element(pair_values.begin(), pair_values.end());
}

double group_statistic(const AdjacencyMatrix& adj, const Spectrum& spec, const CouplingPlan& plan, Index K0,
                       Variant variant, std::vector<double>* pair_values, std::vector<std::string>* warnings) {
  if (plan.pairs.empty()) throw ValidationError("group statistic over an empty coupling");
  std::vector<double> values;
  values.reserve(plan.pairs.size());
  for (const auto& [i, j] : plan.pairs) {
    const CovarianceEstimate sigma =
        variant == Variant::T ? sigma_pair(adj, spec, i, j, K0) : sigma_ratio(adj, spec, i, j, K0);
    values.push_back(pair_statistic(spec, sigma, i, j, K0, variant, warnings));
  }
  const double stat = group_statistic(values);
  if (pair_values) *pair_values = std::move(values);
  return stat;
}

int degrees_of_freedom(Index K0, Variant variant) {
  const Index df = variant == Variant::T ? K0 : K0 - 1;
  if (df < 1) throw ValidationError("the ratio variant needs K0 >= 2");
  return static_cast<int>(df);
}

double gumbel_centering(Index m, Index K_eff) {
  if (K_eff < 1) throw ValidationError("K_eff must be at least 1");
  const double half = 0.5 * static_cast<double>(m);
  if (!(half > 1.0)) throw ValidationError("Gumbel centering needs m / 2 > 1");
  const double k = static_cast<double>(K_eff);
  return 2.0 * std::log(half) + (k - 2.0) * std::log(std::log(half)) - 2.0 * dist::ln_gamma(0.5 * k);
}

double pair_pvalue(double stat, int df) { return dist::chi2_sf(std::max(0.0, stat), df); }

double group_pvalue(double stat, Index m, Index K_eff) {
  return dist::gumbel_sf(0.5 * (stat - gumbel_centering(m, K_eff)));
}

double max_chi2_pvalue(double stat, Index m, int df) {
  const double pairs = std::floor(0.5 * static_cast<double>(m));
  if (pairs < 1.0) throw ValidationError("need at least one pair");
  const double sf = dist::chi2_sf(std::max(0.0, stat), df);
  return -std::expm1(pairs * std::log1p(-sf));
}

Calibration group_calibration(Index m) { return m >= 6 ? Calibration::gumbel : Calibration::max_chi2; }

double critical_value(Calibration cal, double alpha, Index m, int df) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  switch (cal) {
    case Calibration::chi2: return dist::chi2_upper_quantile(alpha, df);
    case Calibration::gumbel: return gumbel_centering(m, df) + 2.0 * dist::gumbel_quantile(1.0 - alpha);
    case Calibration::max_chi2: {
      const double pairs = std::floor(0.5 * static_cast<double>(m));
      return dist::chi2_upper_quantile(-std::expm1(std::log1p(-alpha) / pairs), df);
    }
  }
  return 0.0;
}

void calibrate(TestReport& r) {
  r.df = degrees_of_freedom(r.K0, r.variant);
  if (r.scope == Scope::pair) {
    r.calibration = Calibration::chi2;
    r.p_value = pair_pvalue(r.statistic, r.df);
  } else {
    r.calibration = group_calibration(r.m);
    if (r.calibration == Calibration::gumbel) {
      r.b_m = gumbel_centering(r.m, r.df);
      r.p_value = group_pvalue(r.statistic, r.m, r.df);
    } else {
      r.b_m.reset();
      r.p_value = max_chi2_pvalue(r.statistic, r.m, r.df);
    }
  }
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  r.critical = critical_value(r.calibration, r.alpha, r.m, r.df);
  r.reject = r.statistic >= r.critical;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

void check_ratio_k0(Index K0, Variant variant, bool estimated) {
  if (variant != Variant::ratio || K0 >= 2) return;
  const std::string msg = "the ratio variant needs K0 >= 2 but K0 = " + std::to_string(K0) +
                          "; use variant T or pass a K0 override";
  if (estimated) throw NumericalError(msg);
  throw ValidationError(msg);
}

struct K0Choice {
  Spectrum spec;
  Index K0 = 0;
  bool estimated = true;
  double threshold = 0.0;
};

K0Choice choose_k0(const AdjacencyMatrix& adj, K0Rule rule, const TestOptions& opt) {
  K0Choice c;
  const Index n = adj.n();
  const DegreeScale ds = max_degree_q(adj);
  c.threshold = k0_threshold(ds.q, n, rule, opt.loglog_multiplier);
  if (opt.k0_override) {
    if (*opt.k0_override < 1 || *opt.k0_override > n) throw ValidationError("K0 override must lie in [1, n]");
    c.K0 = *opt.k0_override;
    c.estimated = false;
    c.spec = leading_spectrum(adj, c.K0, c.threshold);
  } else {
    c.spec = leading_spectrum(adj, 1, c.threshold);
    c.K0 = estimate_k0(c.spec, ds.q, n, rule, opt.loglog_multiplier);
  }
  return c;
}

}  // namespace

TestReport run_pair_test(const AdjacencyMatrix& adj, Index i, Index j, const TestOptions& options) {
  check_adjacency(adj);
  check_alpha(options.alpha);
  if (i == j) throw ValidationError("pair test needs two distinct nodes");
  if (i < 0 || j < 0 || i >= adj.n() || j >= adj.n()) throw ValidationError("node index out of range");

  const K0Choice c = choose_k0(adj, K0Rule::pair, options);
  check_ratio_k0(c.K0, options.variant, c.estimated);

  TestReport r;
  r.variant = options.variant;
  r.scope = Scope::pair;
  r.K0 = c.K0;
  r.k0_estimated = c.estimated;
  r.k0_threshold = c.threshold;
  r.m = 2;
  r.alpha = options.alpha;
  r.nodes = {i, j};
  const CovarianceEstimate sigma = options.variant == Variant::T ? sigma_pair(adj, c.spec, i, j, c.K0)
                                                                 : sigma_ratio(adj, c.spec, i, j, c.K0);
  r.statistic = pair_statistic(c.spec, sigma, i, j, c.K0, options.variant, &r.warnings);
  r.pair_statistics = {r.statistic};
  calibrate(r);
  return r;
}

TestReport run_group_test(const AdjacencyMatrix& adj, const NodeSet& group, std::uint64_t seed,
                          const TestOptions& options) {
  check_adjacency(adj);
  check_alpha(options.alpha);
  check_group(group, adj.n());

  NodeSet tested = group;
  if (options.subsample) {
    const Index m0 = *options.subsample;
    if (m0 < 2 || m0 > static_cast<Index>(group.size()))
      throw ValidationError("subsample size must lie in [2, |M|]");
    rng::CounterStream stream(rng::derive(seed, rng::Stream::subsample));
    for (std::size_t k = 0; k < static_cast<std::size_t>(m0); ++k) {
      const auto u = k + static_cast<std::size_t>(stream.next_below(tested.size() - k));
      std::swap(tested[k], tested[u]);
    }
    tested.resize(static_cast<std::size_t>(m0));
    std::sort(tested.begin(), tested.end());
  }

  const K0Choice c = choose_k0(adj, K0Rule::group, options);
  check_ratio_k0(c.K0, options.variant, c.estimated);

  TestReport r;
  r.variant = options.variant;
  r.scope = Scope::group;
  r.K0 = c.K0;
  r.k0_estimated = c.estimated;
  r.k0_threshold = c.threshold;
  r.alpha = options.alpha;
  r.nodes = group;
  r.subsample = options.subsample;
  r.coupling = random_coupling(tested, seed);
  r.m = 2 * static_cast<Index>(r.coupling->pairs.size());
  r.statistic = group_statistic(adj, c.spec, *r.coupling, c.K0, options.variant, &r.pair_statistics, &r.warnings);
  if (r.m < 6)
    r.warnings.push_back("group smaller than 6: exact max-of-chi-square calibration used");
  if (options.subsample) r.warnings.push_back("experimental subsampled group test");
  calibrate(r);
  return r;
}

std::string report_to_json(const TestReport& r, int index_base) {
  nlohmann::ordered_json j;
  j["scope"] = r.scope == Scope::pair ? "pair" : "group";
  j["variant"] = to_string(r.variant);
  j["statistic"] = r.statistic;
  j["K0"] = r.K0;
  j["K0_estimated"] = r.k0_estimated;
  j["K0_threshold"] = r.k0_threshold;
  j["m"] = r.m;
  j["df"] = r.df;
  j["calibration"] = r.calibration == Calibration::chi2     ? "chi2"
                     : r.calibration == Calibration::gumbel ? "gumbel"
                                                            : "max_chi2";
  if (r.b_m) j["b_m"] = *r.b_m;
  else j["b_m"] = nullptr;
  j["critical_value"] = r.critical;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["reject"] = r.reject;
  std::vector<Index> nodes;
  for (Index v : r.nodes) nodes.push_back(v + index_base);
  j["nodes"] = nodes;
  if (r.coupling) {
    nlohmann::ordered_json c;
    c["seed"] = r.coupling->seed;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& [a, b] : r.coupling->pairs) pairs.push_back({a + index_base, b + index_base});
    c["pairs"] = pairs;
    if (r.coupling->dropped) c["dropped"] = *r.coupling->dropped + index_base;
    else c["dropped"] = nullptr;
    j["coupling"] = c;
  }
  j["pair_statistics"] = r.pair_statistics;
  if (r.subsample) j["subsample"] = *r.subsample;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace simplerc
