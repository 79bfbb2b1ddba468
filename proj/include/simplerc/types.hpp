#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace simplerc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Node indices, 0-based internally (the CLI converts from 1-based).
using NodeSet = std::vector<Index>;

/// Undirected graph stored dense for the eigensolver.
struct AdjacencyMatrix {
  Matrix X;
  bool self_loops = false;

  Index n() const { return X.rows(); }
};

/// Eigenvalues in decreasing magnitude with the matching leading eigenvectors.
///
/// `values` may hold every eigenvalue while `vectors` keeps only the first
/// r columns that were requested. Each stored eigenvector is normalized so
/// that its largest-magnitude entry is positive (lowest index on ties).
struct Spectrum {
  Vector values;
  Matrix vectors;

  Index n() const { return vectors.rows(); }
  Index vector_count() const { return vectors.cols(); }
};

/// Throws ValidationError unless X is square, symmetric and binary with a
/// diagonal consistent with the self-loop flag.
void check_adjacency(const AdjacencyMatrix& adj);

}  // namespace simplerc
