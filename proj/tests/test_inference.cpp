#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "fixtures.hpp"
#include "simplerc/distributions.hpp"
#include "simplerc/error.hpp"
#include "simplerc/inference.hpp"
#include "simplerc/model.hpp"
#include "simplerc/rng.hpp"
#include "simplerc/spectral.hpp"

using namespace simplerc;
using namespace simplerc::testing;

namespace {

using Matching = std::vector<std::pair<Index, Index>>;

Matching canonical(const CouplingPlan& plan) {
  Matching out;
  for (auto [a, b] : plan.pairs) out.emplace_back(std::min(a, b), std::max(a, b));
  std::sort(out.begin(), out.end());
  return out;
}

/// Pearson chi-square statistic of observed counts against a uniform law.
double uniform_chi2(const std::vector<int>& counts, int total) {
  const double e = static_cast<double>(total) / static_cast<double>(counts.size());
  double s = 0.0;
  for (int c : counts) s += (c - e) * (c - e) / e;
  return s;
}

template <typename Key>
std::vector<int> tally_values(const std::map<Key, int>& m) {
  std::vector<int> out;
  for (const auto& [k, v] : m) out.push_back(v);
  return out;
}

AdjacencyMatrix example_graph(Index n, double theta, std::uint64_t seed) {
  return sample_adjacency(preset_model(desk_params(1, n, theta)), seed);
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("coupling examples") {
  const CouplingPlan two = random_coupling({4, 9}, 3);
  REQUIRE(two.pairs.size() == 1);
  CHECK(canonical(two) == Matching{{4, 9}});
  CHECK_FALSE(two.dropped.has_value());
  CHECK_THROWS_AS(random_coupling({1}, 0), ValidationError);

  const NodeSet group = {0, 1, 2, 3, 4, 5, 6};
  const CouplingPlan seven = random_coupling(group, 11);
  CHECK(seven.pairs.size() == 3);
  REQUIRE(seven.dropped.has_value());
  std::set<Index> seen = {*seven.dropped};
  for (auto [a, b] : seven.pairs) {
    seen.insert(a);
    seen.insert(b);
  }
  CHECK(seen == std::set<Index>(group.begin(), group.end()));
  CHECK(canonical(random_coupling(group, 11)) == canonical(seven));
}

TEST_CASE("coupling is uniform over perfect matchings") {
  const int draws = 30000;
  // Upper 1% points of chi-square with 2 and 14 degrees of freedom.
  for (auto [size, crit] : {std::pair<Index, double>{4, 9.2103}, {6, 29.1412}}) {
    NodeSet g(static_cast<std::size_t>(size));
    for (Index k = 0; k < size; ++k) g[static_cast<std::size_t>(k)] = 10 + k;
    std::map<Matching, int> counts;
    for (int s = 0; s < draws; ++s) ++counts[canonical(random_coupling(g, static_cast<std::uint64_t>(s)))];
    const std::size_t matchings = size == 4 ? 3 : 15;
    CHECK(counts.size() == matchings);
    CHECK(uniform_chi2(tally_values(counts), draws) < crit);
  }
}

TEST_CASE("odd groups drop a uniformly chosen node") {
  const int draws = 20000;
  std::map<Index, int> dropped;
  for (int s = 0; s < draws; ++s) ++dropped[*random_coupling({0, 1, 2, 3, 4}, static_cast<std::uint64_t>(s)).dropped];
  CHECK(dropped.size() == 5);
  CHECK(uniform_chi2(tally_values(dropped), draws) < 13.2767);  // upper 1% point, 4 df
}

TEST_CASE("pair statistic basics") {
  const AdjacencyMatrix a = example_graph(600, 0.5, 2);
  const Spectrum s = eigendecompose(a, 4);
  const CovarianceEstimate S = sigma_pair(a, s, 3, 4, 3);
  CHECK(pair_statistic(s, S, 3, 3, 3, Variant::T) == 0.0);

  const CovarianceEstimate S1 = sigma_pair(a, s, 5, 400, 1);
  const double x = s.vectors(5, 0) - s.vectors(400, 0);
  CHECK(pair_statistic(s, S1, 5, 400, 1, Variant::T) == doctest::Approx(x * x / S1.S(0, 0)).epsilon(1e-12));

  const CovarianceEstimate S3 = sigma_pair(a, s, 5, 400, 3);
  const Vector d = pair_difference(s, 5, 400, 3, Variant::T);
  const double direct = d.dot(S3.S.inverse() * d);
  CHECK(pair_statistic(s, S3, 5, 400, 3, Variant::T) == doctest::Approx(direct).epsilon(1e-10));
  CHECK_THROWS_AS(pair_statistic(s, S3, 5, 400, 2, Variant::T), ValidationError);
  CHECK_THROWS_AS(pair_statistic(s, S3, 5, 400, 3, Variant::ratio), ValidationError);
}

TEST_CASE("covariance quadratic form inversion policy") {
  Matrix S = Vector(Eigen::Vector2d(2.0, 0.5)).asDiagonal();
  const Vector x = Eigen::Vector2d(1.0, 1.0);
  const QuadraticForm q = covariance_quadratic(S, x);
  CHECK(q.value == doctest::Approx(2.5).epsilon(1e-14));
  CHECK_FALSE(q.pseudo_inverse);
  CHECK(q.condition == doctest::Approx(4.0));

  S(1, 1) = 1e-16;
  const QuadraticForm p = covariance_quadratic(S, x);
  CHECK(p.pseudo_inverse);
  CHECK(p.value == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(covariance_quadratic(Matrix::Zero(2, 2), x), SingularCovarianceError);
  CHECK_THROWS_AS(covariance_quadratic(Matrix::Identity(3, 3), x), ValidationError);
}

TEST_CASE("group statistic is the maximum pair statistic") {
  CHECK(group_statistic(std::vector<double>{0.3, 7.5, 2.0}) == 7.5);
  CHECK_THROWS_AS(group_statistic(std::vector<double>{}), ValidationError);

  const AdjacencyMatrix a = example_graph(600, 0.5, 4);
  const Spectrum s = eigendecompose(a, 4);
  const CouplingPlan plan = random_coupling({60, 61, 62, 63, 64, 65, 66, 67}, 8);
  std::vector<double> values;
  const double g = group_statistic(a, s, plan, 3, Variant::T, &values);
  REQUIRE(values.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto [i, j] = plan.pairs[k];
    CHECK(values[k] == pair_statistic(s, sigma_pair(a, s, i, j, 3), i, j, 3, Variant::T));
  }
  CHECK(g == *std::max_element(values.begin(), values.end()));
}

TEST_CASE("Gumbel centering examples") {
  const double b = 2.0 * std::log(10.0) + std::log(std::log(10.0)) - 2.0 * std::lgamma(1.5);
  CHECK(gumbel_centering(20, 3) == doctest::Approx(b).epsilon(1e-13));
  CHECK(gumbel_centering(20, 3) == doctest::Approx(5.6808).epsilon(1e-4));
  CHECK(gumbel_centering(10, 2) == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-13));
  CHECK_THROWS_AS(gumbel_centering(2, 3), ValidationError);
  CHECK_THROWS_AS(gumbel_centering(10, 0), ValidationError);
}

TEST_CASE("Gumbel centering grows with m") {
  for (Index K = 1; K <= 6; ++K)
    for (Index m = 6; m < 400; m += 2) CHECK(gumbel_centering(m + 2, K) > gumbel_centering(m, K));
}

TEST_CASE("calibration routing and p-values") {
  CHECK(group_calibration(4) == Calibration::max_chi2);
  CHECK(group_calibration(6) == Calibration::gumbel);
  CHECK(degrees_of_freedom(3, Variant::T) == 3);
  CHECK(degrees_of_freedom(3, Variant::ratio) == 2);
  CHECK_THROWS_AS(degrees_of_freedom(1, Variant::ratio), ValidationError);

  CHECK(pair_pvalue(4.0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
  const double sf = std::exp(-3.0);
  CHECK(max_chi2_pvalue(6.0, 4, 2) == doctest::Approx(1.0 - (1.0 - sf) * (1.0 - sf)).epsilon(1e-13));
  const double x = 9.0, bm = gumbel_centering(10, 3);
  CHECK(group_pvalue(x, 10, 3) == doctest::Approx(1.0 - std::exp(-std::exp(-0.5 * (x - bm)))).epsilon(1e-13));

  for (Index m : {2, 4, 6, 10, 40}) {
    for (int df : {1, 2, 3, 5}) {
      const Calibration cal = m == 2 ? Calibration::chi2 : group_calibration(m);
      const double c = critical_value(cal, 0.05, m, df);
      const double p = cal == Calibration::chi2     ? pair_pvalue(c, df)
                       : cal == Calibration::gumbel ? group_pvalue(c, m, df)
                                                    : max_chi2_pvalue(c, m, df);
      CHECK(p == doctest::Approx(0.05).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(critical_value(Calibration::chi2, 0.0, 2, 3), ValidationError);
}

TEST_CASE("decision and p-value agree") {
  rng::CounterStream st(31);
  for (int t = 0; t < 2000; ++t) {
    TestReport r;
    r.scope = st.next_uniform() < 0.5 ? Scope::pair : Scope::group;
    r.variant = st.next_uniform() < 0.5 ? Variant::T : Variant::ratio;
    r.K0 = 2 + static_cast<Index>(st.next_below(4));
    r.m = r.scope == Scope::pair ? 2 : 2 * (1 + static_cast<Index>(st.next_below(15)));
    r.alpha = 0.01 + 0.2 * st.next_uniform();
    r.statistic = 30.0 * st.next_uniform();
    calibrate(r);
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
    if (std::fabs(r.p_value - r.alpha) > 1e-9) CHECK(r.reject == (r.p_value < r.alpha));
    CHECK(r.b_m.has_value() == (r.calibration == Calibration::gumbel));
  }
}

TEST_CASE("all four statistics are invariant to eigenvector sign flips") {
  const AdjacencyMatrix a = example_graph(800, 0.5, 9);
  const Spectrum s = eigendecompose(a, 4);
  const CouplingPlan plan = random_coupling({100, 150, 200, 250, 700, 710}, 2);
  for (Index flip = 0; flip < 3; ++flip) {
    Spectrum f = s;
    f.vectors.col(flip) *= -1.0;
    for (Variant v : {Variant::T, Variant::ratio}) {
      auto sigma = [&](const Spectrum& sp) {
        return v == Variant::T ? sigma_pair(a, sp, 100, 700, 3) : sigma_ratio(a, sp, 100, 700, 3);
      };
      const double p0 = pair_statistic(s, sigma(s), 100, 700, 3, v);
      const double p1 = pair_statistic(f, sigma(f), 100, 700, 3, v);
      CHECK(p1 == doctest::Approx(p0).epsilon(1e-10));
      const double g0 = group_statistic(a, s, plan, 3, v);
      const double g1 = group_statistic(a, f, plan, 3, v);
      CHECK(g1 == doctest::Approx(g0).epsilon(1e-10));
    }
  }
}

TEST_CASE("test drivers validate their input") {
  const AdjacencyMatrix a = example_graph(500, 0.5, 1);
  TestOptions o;
  CHECK_THROWS_AS(run_pair_test(a, 3, 3, o), ValidationError);
  CHECK_THROWS_AS(run_pair_test(a, 3, 500, o), ValidationError);
  o.alpha = 1.0;
  CHECK_THROWS_AS(run_pair_test(a, 3, 4, o), ValidationError);
  o.alpha = 0.05;
  CHECK_THROWS_AS(run_group_test(a, {1}, 0, o), ValidationError);
  CHECK_THROWS_AS(run_group_test(a, {1, 2, 2}, 0, o), ValidationError);

  o.variant = Variant::ratio;
  o.k0_override = 1;
  CHECK_THROWS_AS(run_pair_test(a, 3, 4, o), ValidationError);

  AdjacencyMatrix empty;
  empty.X = Matrix::Zero(50, 50);
  CHECK_THROWS_AS(run_pair_test(empty, 0, 1, TestOptions{}), NoSignalError);
}

TEST_CASE("pair test report") {
  const PresetParams p = desk_params(1, 1000, 0.5);
  const AdjacencyMatrix a = sample_adjacency(preset_model(p), 5);
  const NodeSet mixed = preset_mixed_nodes(p, 1);
  TestOptions o;
  o.k0_override = 3;
  const TestReport r = run_pair_test(a, mixed[0], mixed[1], o);
  CHECK(r.df == 3);
  CHECK(r.m == 2);
  CHECK_FALSE(r.k0_estimated);
  CHECK(r.critical == doctest::Approx(dist::chi2_upper_quantile(0.05, 3)).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(pair_pvalue(r.statistic, 3)).epsilon(1e-14));
  CHECK(report_to_json(r) == report_to_json(run_pair_test(a, mixed[0], mixed[1], o)));
}

TEST_CASE("group test report") {
  const PresetParams p = desk_params(1, 1000, 0.5);
  const AdjacencyMatrix a = sample_adjacency(preset_model(p), 6);
  const NodeSet mixed = preset_mixed_nodes(p, 1);
  TestOptions o;
  o.k0_override = 3;
  NodeSet g(mixed.begin(), mixed.begin() + 5);
  const TestReport small = run_group_test(a, g, 1, o);
  CHECK(small.m == 4);
  CHECK(small.calibration == Calibration::max_chi2);
  CHECK_FALSE(small.b_m.has_value());
  CHECK_FALSE(small.warnings.empty());

  g.assign(mixed.begin(), mixed.begin() + 10);
  const TestReport r = run_group_test(a, g, 1, o);
  CHECK(r.m == 10);
  CHECK(r.pair_statistics.size() == 5);
  CHECK(r.statistic == *std::max_element(r.pair_statistics.begin(), r.pair_statistics.end()));
  REQUIRE(r.b_m.has_value());
  CHECK(*r.b_m == doctest::Approx(gumbel_centering(10, 3)));

  o.subsample = 6;
  const TestReport sub = run_group_test(a, g, 1, o);
  CHECK(sub.m == 6);
  CHECK(sub.nodes == g);
}

TEST_CASE("desk-scale size and power of the group test") {
  TestOptions o;
  o.k0_override = 3;
  int null_rejects = 0, alt_rejects = 0;
  const int reps = 40;
  PresetParams pn = desk_params(1, 1000, 0.5);
  PresetParams pa = desk_params(3, 1000, 0.5);
  pa.delta = 0.4;
  const Matrix Hn = mean_matrix(preset_model(pn));
  const Matrix Ha = mean_matrix(preset_model(pa));
  const NodeSet n1 = preset_mixed_nodes(pn, 1);
  const NodeSet a1 = preset_mixed_nodes(pa, 1), a2 = preset_mixed_nodes(pa, 2);
  const NodeSet gn(n1.begin(), n1.begin() + 10);
  NodeSet ga(a1.begin(), a1.begin() + 5);
  ga.insert(ga.end(), a2.begin(), a2.begin() + 5);
  for (int rep = 0; rep < reps; ++rep) {
    const auto seed = static_cast<std::uint64_t>(rep);
    null_rejects += run_group_test(sample_adjacency(Hn, false, seed), gn, seed, o).reject;
    alt_rejects += run_group_test(sample_adjacency(Ha, false, seed), ga, seed, o).reject;
  }
  MESSAGE("null rejections " << null_rejects << "/" << reps << ", alternative " << alt_rejects << "/" << reps);
  CHECK(null_rejects <= 10);
  CHECK(alt_rejects >= 30);
}

}  // TEST_SUITE
