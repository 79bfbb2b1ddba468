#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "simplerc/types.hpp"

// Mixed-membership network models, their mean matrices, Bernoulli sampling
// and the population quantities used as oracles.

namespace simplerc {

/// Either one scalar theta (MM) or one positive weight per node (DCMM).
struct DegreeProfile {
  enum class Kind { scalar, per_node };
  Kind kind = Kind::scalar;
  double theta = 0.0;
  Vector values;

  static DegreeProfile mm(double theta);
  static DegreeProfile dcmm(Vector values);
};

struct NetworkModel {
  Matrix membership;  // n x K, rows are probability vectors
  DegreeProfile degrees;
  Matrix kernel;      // K x K
  bool self_loops = false;
  double h_margin = 1e-9;  // require max h_ij <= 1 - h_margin

  Index n() const { return membership.rows(); }
  Index K() const { return membership.cols(); }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
  double max_h = 0.0;
  Vector kernel_eigenvalues;
};

/// Rates from the hypotheses; stored, never used in computation.
struct HypothesisSpec {
  NodeSet group;
  std::optional<double> c1n;
  std::optional<double> c2n;
};

ValidationReport validate_model(const NetworkModel& model);

/// Rescale every membership row to sum to one. Only on explicit request.
Matrix renormalize_rows(const Matrix& membership);

/// H = Theta Pi P Pi' Theta (or theta Pi P Pi'); symmetric bit for bit.
Matrix mean_matrix(const NetworkModel& model);

/// Upper-triangle Bernoulli draws keyed on (seed, i * n + j).
AdjacencyMatrix sample_adjacency(const NetworkModel& model, std::uint64_t seed);
AdjacencyMatrix sample_adjacency(const Matrix& H, bool self_loops, std::uint64_t seed);

/// The K nonzero eigenpairs of H in decreasing magnitude.
/// Throws NumericalError if H has numerical rank below K.
Spectrum population_spectrum(const Matrix& H, Index K);

double null_closeness(const Matrix& membership, const NodeSet& group);
double alt_separation(const Matrix& membership, const NodeSet& group);

void check_group(const NodeSet& group, Index n);

// ---------------------------------------------------------------------------
// Simulation presets

/// Layout of the simulation designs: K * n0 pure nodes (community by
/// community), then the remaining nodes split evenly across four mixed
/// profiles a1..a4 (any remainder goes to a4).
struct PresetParams {
  int example = 1;            // 1..4
  Index n = 3000;
  Index K = 5;
  Index n0 = 300;
  double theta = 0.5;         // examples 1 and 3
  double r = 1.0;             // examples 2 and 4: degrees r * U[0.5, 1]
  double rho = 0.2;
  double delta = 0.0;         // examples 3 and 4
  std::uint64_t degree_seed = 0;
  bool self_loops = false;
};

NetworkModel preset_model(const PresetParams& params);

/// Nodes carrying mixed profile a_l (l in 1..4) in the preset layout.
NodeSet preset_mixed_nodes(const PresetParams& params, int profile);

/// Nodes purely in community k (0-based) in the preset layout.
NodeSet preset_pure_nodes(const PresetParams& params, Index k);

/// P with unit diagonal and rho / |k - l| off the diagonal.
Matrix preset_kernel(Index K, double rho);

// ---------------------------------------------------------------------------
// JSON model documents

struct ModelConfig {
  std::string preset = "example1";  // example1..example4 or custom
  PresetParams params;
  // custom models only
  std::optional<Matrix> membership;
  std::optional<Matrix> kernel;
  std::optional<Vector> degree_vector;
};

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);
NetworkModel build_model(const ModelConfig& config);

}  // namespace simplerc
