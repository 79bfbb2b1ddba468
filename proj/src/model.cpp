#include "simplerc/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "simplerc/error.hpp"
#include "simplerc/kernels.hpp"
#include "simplerc/rng.hpp"
#include "simplerc/spectral.hpp"

namespace simplerc {

using nlohmann::ordered_json;

DegreeProfile DegreeProfile::mm(double theta) {
  DegreeProfile d;
  d.kind = Kind::scalar;
  d.theta = theta;
  return d;
}

DegreeProfile DegreeProfile::dcmm(Vector values) {
  DegreeProfile d;
  d.kind = Kind::per_node;
  d.values = std::move(values);
  return d;
}

void check_adjacency(const AdjacencyMatrix& adj) {
  const Matrix& X = adj.X;
  if (X.rows() != X.cols()) throw ValidationError("adjacency matrix must be square");
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      const double x = X(i, j);
      if (x != 0.0 && x != 1.0)
        throw ValidationError("adjacency entry (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") is not 0 or 1");
      if (x != X(j, i))
        throw ValidationError("adjacency matrix is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
    }
    if (!adj.self_loops && X(j, j) != 0.0)
      throw ValidationError("nonzero diagonal at " + std::to_string(j) + " with self loops disabled");
  }
}

namespace {

bool dimensions_ok(const NetworkModel& model, std::vector<std::string>* why) {
  bool ok = true;
  auto fail = [&](const std::string& msg) {
    ok = false;
    if (why) why->push_back(msg);
  };
  if (model.membership.rows() < 1 || model.membership.cols() < 1) fail("dimensions: empty membership matrix");
  if (model.kernel.rows() != model.K() || model.kernel.cols() != model.K())
    fail("dimensions: kernel is not K x K");
  if (model.degrees.kind == DegreeProfile::Kind::per_node && model.degrees.values.size() != model.n())
    fail("dimensions: degree vector length differs from n");
  return ok;
}

}  // namespace

ValidationReport validate_model(const NetworkModel& model) {
  ValidationReport report;
  auto violate = [&](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };
  if (!dimensions_ok(model, &report.violations)) {
    report.ok = false;
    return report;
  }

  const Matrix& Pi = model.membership;
  for (Index i = 0; i < Pi.rows(); ++i) {
    if ((Pi.row(i).array() < 0.0).any()) {
      violate("nonnegative: membership row " + std::to_string(i) + " has a negative entry");
      break;
    }
  }
  for (Index i = 0; i < Pi.rows(); ++i) {
    if (std::fabs(Pi.row(i).sum() - 1.0) > 1e-12) {
      violate("row-stochastic: membership row " + std::to_string(i) + " sums to " +
              std::to_string(Pi.row(i).sum()));
      break;
    }
  }

  if (model.degrees.kind == DegreeProfile::Kind::scalar) {
    if (!(model.degrees.theta > 0.0)) violate("degrees: theta must be strictly positive");
  } else if (!(model.degrees.values.array() > 0.0).all()) {
    violate("degrees: every node weight must be strictly positive");
  }

  const Matrix& P = model.kernel;
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12) violate("kernel: P is not symmetric");
  if ((P.array() < 0.0).any() || (P.array() > 1.0).any()) violate("kernel: entries outside [0, 1]");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
  report.kernel_eigenvalues = es.eigenvalues().reverse();

  const Matrix H = mean_matrix(model);
  report.max_h = H.maxCoeff();
  if (report.max_h > 1.0 - model.h_margin)
    violate("mean bound: max h_ij = " + std::to_string(report.max_h) + " exceeds 1 - margin");
  if (H.minCoeff() < 0.0) violate("mean bound: negative h_ij");
  return report;
}

Matrix renormalize_rows(const Matrix& membership) {
  Matrix out = membership;
  for (Index i = 0; i < out.rows(); ++i) {
    const double s = out.row(i).sum();
    if (!(s > 0.0)) throw ValidationError("membership row " + std::to_string(i) + " has zero mass");
    out.row(i) /= s;
  }
  return out;
}

Matrix mean_matrix(const NetworkModel& model) {
  std::vector<std::string> why;
  if (!dimensions_ok(model, &why)) throw ValidationError(why.front());
  const Matrix A = model.membership * model.kernel;
  Matrix H = A * model.membership.transpose();
  if (model.degrees.kind == DegreeProfile::Kind::scalar) {
    H *= model.degrees.theta;
  } else {
    const Vector& t = model.degrees.values;
    H = t.asDiagonal() * H * t.asDiagonal();
  }
  H.triangularView<Eigen::StrictlyLower>() = H.transpose();
  return H;
}

AdjacencyMatrix sample_adjacency(const Matrix& H, bool self_loops, std::uint64_t seed) {
  if (H.rows() != H.cols()) throw ValidationError("mean matrix must be square");
  if (H.size() > 0 && (H.minCoeff() < 0.0 || H.maxCoeff() > 1.0))
    throw ValidationError("mean matrix entries must lie in [0, 1]");
  AdjacencyMatrix adj;
  adj.self_loops = self_loops;
  adj.X = kernels::omp::sample_bernoulli(H, self_loops, rng::derive(seed, rng::Stream::adjacency));
  return adj;
}

AdjacencyMatrix sample_adjacency(const NetworkModel& model, std::uint64_t seed) {
  return sample_adjacency(mean_matrix(model), model.self_loops, seed);
}

Spectrum population_spectrum(const Matrix& H, Index K) {
  if (H.rows() != H.cols()) throw ValidationError("mean matrix must be square");
  if (K < 1 || K > H.rows()) throw ValidationError("K must lie in [1, n]");
  Spectrum s = SymmetricEigenSolver::leading(H, K);
  const double scale = std::max(std::fabs(s.values(0)), 1.0);
  if (std::fabs(s.values(K - 1)) <= 1e-10 * scale * static_cast<double>(H.rows()))
    throw NumericalError("mean matrix has numerical rank below K = " + std::to_string(K));
  s.values.conservativeResize(K);
  return s;
}

void check_group(const NodeSet& group, Index n) {
  if (group.size() < 2) throw ValidationError("group must contain at least two nodes");
  std::set<Index> seen;
  for (Index v : group) {
    if (v < 0 || v >= n) throw ValidationError("node index " + std::to_string(v) + " out of range");
    if (!seen.insert(v).second) throw ValidationError("node " + std::to_string(v) + " repeated in group");
  }
}

double null_closeness(const Matrix& membership, const NodeSet& group) {
  check_group(group, membership.rows());
  double best = 0.0;
  for (std::size_t a = 0; a < group.size(); ++a)
    for (std::size_t b = a + 1; b < group.size(); ++b)
      best = std::max(best, (membership.row(group[a]) - membership.row(group[b])).norm());
  return best;
}

double alt_separation(const Matrix& membership, const NodeSet& group) {
  check_group(group, membership.rows());
  double best = 0.0;
  for (std::size_t a = 0; a < group.size(); ++a) {
    for (std::size_t b = a + 1; b < group.size(); ++b) {
      const auto pi = membership.row(group[a]);
      const auto pj = membership.row(group[b]);
      const double g11 = pi.squaredNorm();
      const double g22 = pj.squaredNorm();
      const double g12 = pi.dot(pj);
      const double half_tr = 0.5 * (g11 + g22);
      const double det = g11 * g22 - g12 * g12;
      // smaller root of x^2 - tr x + det, written to avoid cancellation
      const double big = half_tr + std::sqrt(std::max(0.0, 0.25 * (g11 - g22) * (g11 - g22) + g12 * g12));
      const double lam_min = big > 0.0 ? std::max(0.0, det) / big : 0.0;
      best = std::max(best, std::sqrt(lam_min));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

Matrix preset_kernel(Index K, double rho) {
  Matrix P(K, K);
  for (Index a = 0; a < K; ++a)
    for (Index b = 0; b < K; ++b)
      P(a, b) = a == b ? 1.0 : rho / static_cast<double>(std::abs(a - b));
  return P;
}

namespace {

void check_preset(const PresetParams& p) {
  if (p.example < 1 || p.example > 4) throw ValidationError("example must be 1, 2, 3 or 4");
  if (p.K != 5) throw ValidationError("the preset mixed profiles are defined for K = 5");
  if (p.n0 < 0 || p.K * p.n0 + 4 > p.n)
    throw ValidationError("need n >= K * n0 + 4 so each mixed group is nonempty");
  if (p.rho < 0.0 || p.rho > 1.0) throw ValidationError("rho must lie in [0, 1]");
  if ((p.example == 1 || p.example == 3) && !(p.theta > 0.0 && p.theta <= 1.0))
    throw ValidationError("theta must lie in (0, 1]");
  if ((p.example == 2 || p.example == 4) && !(p.r > 0.0 && p.r <= 1.0))
    throw ValidationError("r must lie in (0, 1]");
  if (p.example <= 2 && p.delta != 0.0) throw ValidationError("delta applies to examples 3 and 4 only");
  if (!(p.delta >= 0.0 && p.delta <= 0.6)) throw ValidationError("delta must lie in [0, 0.6]");
}

Index mixed_group_size(const PresetParams& p) { return (p.n - p.K * p.n0) / 4; }

Vector mixed_profile(const PresetParams& p, int l) {
  Vector a = Vector::Constant(p.K, 0.1);
  switch (l) {
    case 1: a(1) = 0.6; break;
    case 2:
      if (p.example >= 3) {
        a(0) = 0.1 + p.delta;
        a(1) = 0.6 - p.delta;
      } else {
        a(0) = 0.6;
      }
      break;
    case 3: a(2) = 0.6; break;
    default: a.setConstant(1.0 / static_cast<double>(p.K)); break;
  }
  return a;
}

}  // namespace

NodeSet preset_mixed_nodes(const PresetParams& params, int profile) {
  check_preset(params);
  if (profile < 1 || profile > 4) throw ValidationError("mixed profile index must be 1..4");
  const Index g = mixed_group_size(params);
  const Index start = params.K * params.n0 + (profile - 1) * g;
  const Index stop = profile == 4 ? params.n : start + g;
  NodeSet out;
  for (Index v = start; v < stop; ++v) out.push_back(v);
  return out;
}

NodeSet preset_pure_nodes(const PresetParams& params, Index k) {
  check_preset(params);
  if (k < 0 || k >= params.K) throw ValidationError("community index out of range");
  NodeSet out;
  for (Index v = k * params.n0; v < (k + 1) * params.n0; ++v) out.push_back(v);
  return out;
}

NetworkModel preset_model(const PresetParams& params) {
  check_preset(params);
  NetworkModel model;
  model.membership = Matrix::Zero(params.n, params.K);
  for (Index k = 0; k < params.K; ++k)
    for (Index v : preset_pure_nodes(params, k)) model.membership(v, k) = 1.0;
  for (int l = 1; l <= 4; ++l) {
    const Vector a = mixed_profile(params, l);
    for (Index v : preset_mixed_nodes(params, l)) model.membership.row(v) = a.transpose();
  }
  model.kernel = preset_kernel(params.K, params.rho);
  model.self_loops = params.self_loops;
  if (params.example == 1 || params.example == 3) {
    model.degrees = DegreeProfile::mm(params.theta);
  } else {
    rng::CounterStream stream(rng::derive(params.degree_seed, rng::Stream::degrees));
    Vector t(params.n);
    for (Index v = 0; v < params.n; ++v) t(v) = params.r * (0.5 + 0.5 * stream.next_uniform());
    model.degrees = DegreeProfile::dcmm(std::move(t));
  }
  return model;
}

// ---------------------------------------------------------------------------

namespace {

ordered_json matrix_to_json(const Matrix& M) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError(std::string(name) + " must be a nonempty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  Matrix M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ValidationError(std::string(name) + " rows have unequal lengths");
    for (Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) {
  const PresetParams& p = config.params;
  ordered_json j;
  j["preset"] = config.preset;
  j["n"] = p.n;
  j["K"] = p.K;
  j["n0"] = p.n0;
  if (config.degree_vector) {
    j["degrees"] = std::vector<double>(config.degree_vector->data(),
                                       config.degree_vector->data() + config.degree_vector->size());
  } else if (p.example == 2 || p.example == 4) {
    j["r"] = p.r;
    j["degree_seed"] = p.degree_seed;
  } else {
    j["theta"] = p.theta;
  }
  if (config.kernel) j["P"] = matrix_to_json(*config.kernel);
  else j["rho"] = p.rho;
  if (config.membership) j["membership"] = matrix_to_json(*config.membership);
  j["delta"] = p.delta;
  j["self_loops"] = p.self_loops;
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("model config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("model config must be a JSON object");
  ModelConfig c;
  try {
    c.preset = j.value("preset", std::string("example1"));
    PresetParams& p = c.params;
    if (c.preset.rfind("example", 0) == 0 && c.preset.size() == 8) p.example = c.preset[7] - '0';
    else if (c.preset != "custom") throw ValidationError("unknown preset '" + c.preset + "'");
    p.n = j.value("n", p.n);
    p.K = j.value("K", p.K);
    p.n0 = j.value("n0", p.n0);
    p.theta = j.value("theta", p.theta);
    p.r = j.value("r", p.r);
    p.rho = j.value("rho", p.rho);
    p.delta = j.value("delta", p.delta);
    p.degree_seed = j.value("degree_seed", p.degree_seed);
    p.self_loops = j.value("self_loops", p.self_loops);
    if (j.contains("P")) c.kernel = matrix_from_json(j["P"], "P");
    if (j.contains("membership")) c.membership = matrix_from_json(j["membership"], "membership");
    if (j.contains("degrees")) {
      const auto v = j["degrees"].get<std::vector<double>>();
      c.degree_vector = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config field has the wrong type: ") + e.what());
  }
  if (c.preset == "custom" && !c.membership)
    throw ValidationError("custom model requires a membership matrix");
  return c;
}

NetworkModel build_model(const ModelConfig& config) {
  if (config.preset != "custom") {
    NetworkModel m = preset_model(config.params);
    if (config.kernel) m.kernel = *config.kernel;
    if (config.degree_vector) m.degrees = DegreeProfile::dcmm(*config.degree_vector);
    return m;
  }
  NetworkModel m;
  m.membership = *config.membership;
  m.kernel = config.kernel ? *config.kernel : preset_kernel(m.K(), config.params.rho);
  m.degrees = config.degree_vector ? DegreeProfile::dcmm(*config.degree_vector)
                                   : DegreeProfile::mm(config.params.theta);
  m.self_loops = config.params.self_loops;
  return m;
}

}  // namespace simplerc
