#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "simplerc/types.hpp"

namespace simplerc {

/// edge_list: optional "n=<count>" header then 1-based "i j" lines.
/// dense_csv: n rows of n comma-separated 0/1 values.
/// coordinate: "%%" header, a size line "n n nnz", then "i j 1" triples.
enum class AdjFormat { edge_list, dense_csv, coordinate };

AdjFormat parse_format(const std::string& name);
/// Guess from the file extension (.csv, .mtx, otherwise edge list).
AdjFormat format_from_path(const std::string& path);

AdjacencyMatrix read_adjacency(std::istream& in, AdjFormat format);
void write_adjacency(std::ostream& out, const AdjacencyMatrix& adj, AdjFormat format);

AdjacencyMatrix load_adjacency(const std::string& path, AdjFormat format);
void save_adjacency(const std::string& path, const AdjacencyMatrix& adj, AdjFormat format);

struct SeriesPanel {
  std::vector<std::string> names;
  Matrix values;                    // T x n
  std::optional<Matrix> covariates;  // T x f
  std::size_t dropped_rows = 0;
};

/// CSV with a header row of series names. Rows with an empty, NA or NaN
/// field (in the series or the covariates) are dropped.
SeriesPanel read_panel(std::istream& series, std::istream* covariates = nullptr);
SeriesPanel load_panel(const std::string& series_path, const std::optional<std::string>& covariate_path = {});

/// Least-squares residuals of every column of Y on [1, F].
Matrix residualize(const Matrix& Y, const Matrix& F);

/// X_ij = 1 iff |corr_ij| >= threshold (i != j) on the optionally
/// residualized series.
AdjacencyMatrix correlation_network(const SeriesPanel& panel, double threshold = 0.5, bool residualize = false);

}  // namespace simplerc
