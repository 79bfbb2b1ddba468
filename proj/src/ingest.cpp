#include "simplerc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "simplerc/error.hpp"
#include "simplerc/kernels.hpp"

namespace simplerc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

long long parse_int(const std::string& tok, std::size_t line, const char* what) {
  long long v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ParseError(std::string("expected an integer ") + what + ", got '" + tok + "'", line);
  return v;
}

double parse_binary(const std::string& tok, std::size_t line) {
  if (tok == "0") return 0.0;
  if (tok == "1") return 1.0;
  throw ParseError("non-binary entry '" + tok + "'", line);
}

void set_edge(Matrix& X, long long i, long long j, std::size_t line) {
  const auto n = static_cast<long long>(X.rows());
  if (i < 1 || j < 1 || i > n || j > n)
    throw ParseError("node index out of range 1.." + std::to_string(n), line);
  X(i - 1, j - 1) = 1.0;
  X(j - 1, i - 1) = 1.0;
}

AdjacencyMatrix read_edge_list(std::istream& in) {
  std::vector<std::tuple<long long, long long, std::size_t>> edges;
  std::optional<long long> n;
  bool self_loops = false;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == '%') continue;
    if (s.rfind("n=", 0) == 0) {
      n = parse_int(trim(s.substr(2)), line, "node count");
      if (*n < 1) throw ParseError("node count must be positive", line);
      continue;
    }
    if (s.rfind("self_loops=", 0) == 0) {
      const std::string v = trim(s.substr(11));
      if (v != "true" && v != "false") throw ParseError("self_loops must be true or false", line);
      self_loops = v == "true";
      continue;
    }
    std::istringstream is(s);
    std::string a, b, extra;
    if (!(is >> a >> b) || (is >> extra)) throw ParseError("expected two node indices", line);
    edges.emplace_back(parse_int(a, line, "node index"), parse_int(b, line, "node index"), line);
  }
  long long size = n.value_or(0);
  if (!n)
    for (const auto& [i, j, l] : edges) size = std::max({size, i, j});
  AdjacencyMatrix adj;
  adj.self_loops = self_loops;
  adj.X = Matrix::Zero(size, size);
  for (const auto& [i, j, l] : edges) {
    if (i == j && !self_loops) throw ParseError("self loop " + std::to_string(i) + " without self_loops=true", l);
    set_edge(adj.X, i, j, l);
  }
  return adj;
}

AdjacencyMatrix read_dense(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto fields = split(s, ',');
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_binary(f, line));
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("row length differs from the first row", line);
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  if (n > 0 && static_cast<Index>(rows.front().size()) != n)
    throw ValidationError("dense adjacency is not square: " + std::to_string(n) + " rows of " +
                          std::to_string(rows.front().size()));
  AdjacencyMatrix adj;
  adj.X.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) adj.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (adj.X(i, j) != adj.X(j, i))
        throw ValidationError("asymmetric adjacency at row " + std::to_string(i + 1) + ", column " +
                              std::to_string(j + 1));
  adj.self_loops = n > 0 && adj.X.diagonal().any();
  return adj;
}

AdjacencyMatrix read_coordinate(std::istream& in) {
  std::string raw;
  std::size_t line = 0;
  bool symmetric = false;
  bool have_header = false;
  bool have_size = false;
  long long n = 0, nnz = 0, seen = 0;
  AdjacencyMatrix adj;
  Matrix general;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.rfind("%%", 0) == 0) {
      have_header = true;
      std::string lower = s;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      symmetric = lower.find("symmetric") != std::string::npos;
      continue;
    }
    if (s.empty() || s[0] == '%') continue;
    if (!have_header) throw ParseError("missing %% header line", line);
    std::istringstream is(s);
    std::vector<std::string> tok;
    for (std::string t; is >> t;) tok.push_back(t);
    if (!have_size) {
      if (tok.size() != 3) throw ParseError("expected size line 'n n nnz'", line);
      n = parse_int(tok[0], line, "row count");
      const long long cols = parse_int(tok[1], line, "column count");
      nnz = parse_int(tok[2], line, "entry count");
      if (n != cols) throw ParseError("coordinate matrix is not square", line);
      if (n < 0 || nnz < 0) throw ParseError("negative size", line);
      general = Matrix::Zero(n, n);
      have_size = true;
      continue;
    }
    if (tok.size() != 3 && tok.size() != 2) throw ParseError("expected 'i j 1'", line);
    const long long i = parse_int(tok[0], line, "row index");
    const long long j = parse_int(tok[1], line, "column index");
    const double v = tok.size() == 3 ? parse_binary(tok[2], line) : 1.0;
    if (i < 1 || j < 1 || i > n || j > n) throw ParseError("index out of range", line);
    general(i - 1, j - 1) = v;
    if (symmetric) general(j - 1, i - 1) = v;
    ++seen;
  }
  if (!have_size) throw ParseError("missing size line", line);
  if (seen != nnz)
    throw ParseError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(seen), line);
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if (general(a, b) != general(b, a))
        throw ValidationError("asymmetric adjacency at row " + std::to_string(a + 1) + ", column " +
                              std::to_string(b + 1));
  adj.X = std::move(general);
  adj.self_loops = n > 0 && adj.X.diagonal().any();
  return adj;
}

bool is_missing(const std::string& f) {
  if (f.empty()) return true;
  std::string l = f;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  return l == "na" || l == "nan" || l == "null";
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // NaN marks missing
};

RawTable read_table(std::istream& in) {
  RawTable t;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    auto fields = split(trim(raw), ',');
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line);
    std::vector<double> row;
    for (const auto& f : fields) {
      if (is_missing(f)) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw ParseError("not a number: '" + f + "'", line);
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError("panel file has no header row");
  return t;
}

bool row_complete(const std::vector<double>& r) {
  return std::none_of(r.begin(), r.end(), [](double v) { return std::isnan(v); });
}

}  // namespace

AdjFormat parse_format(const std::string& name) {
  if (name == "edge-list" || name == "edges" || name == "edgelist") return AdjFormat::edge_list;
  if (name == "dense-csv" || name == "csv" || name == "dense") return AdjFormat::dense_csv;
  if (name == "coordinate" || name == "mtx" || name == "matrix-market") return AdjFormat::coordinate;
  throw ValidationError("unknown adjacency format '" + name + "'");
}

AdjFormat format_from_path(const std::string& path) {
  auto ends = [&](const std::string& suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends(".csv")) return AdjFormat::dense_csv;
  if (ends(".mtx")) return AdjFormat::coordinate;
  return AdjFormat::edge_list;
}

AdjacencyMatrix read_adjacency(std::istream& in, AdjFormat format) {
  switch (format) {
    case AdjFormat::edge_list: return read_edge_list(in);
    case AdjFormat::dense_csv: return read_dense(in);
    case AdjFormat::coordinate: return read_coordinate(in);
  }
  throw ValidationError("unknown adjacency format");
}

void write_adjacency(std::ostream& out, const AdjacencyMatrix& adj, AdjFormat format) {
  check_adjacency(adj);
  const Index n = adj.n();
  switch (format) {
    case AdjFormat::edge_list:
      out << "n=" << n << '\n';
      if (adj.self_loops) out << "self_loops=true\n";
      for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j)
          if (adj.X(i, j) != 0.0) out << (i + 1) << ' ' << (j + 1) << '\n';
      break;
    case AdjFormat::dense_csv:
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) out << (j ? "," : "") << (adj.X(i, j) != 0.0 ? '1' : '0');
        out << '\n';
      }
      break;
    case AdjFormat::coordinate: {
      Index nnz = 0;
      for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) nnz += adj.X(i, j) != 0.0;
      out << "%%MatrixMarket matrix coordinate integer symmetric\n";
      out << n << ' ' << n << ' ' << nnz << '\n';
      for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i)
          if (adj.X(i, j) != 0.0) out << (i + 1) << ' ' << (j + 1) << " 1\n";
      break;
    }
  }
}

AdjacencyMatrix load_adjacency(const std::string& path, AdjFormat format) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_adjacency(in, format);
}

void save_adjacency(const std::string& path, const AdjacencyMatrix& adj, AdjFormat format) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_adjacency(out, adj, format);
}

SeriesPanel read_panel(std::istream& series, std::istream* covariates) {
  const RawTable ys = read_table(series);
  std::optional<RawTable> fs;
  if (covariates) {
    fs = read_table(*covariates);
    if (fs->rows.size() != ys.rows.size())
      throw ValidationError("series and covariate panels have different row counts");
  }
  SeriesPanel p;
  p.names = ys.header;
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < ys.rows.size(); ++t) {
    if (row_complete(ys.rows[t]) && (!fs || row_complete(fs->rows[t]))) keep.push_back(t);
    else ++p.dropped_rows;
  }
  const auto T = static_cast<Index>(keep.size());
  p.values.resize(T, static_cast<Index>(ys.header.size()));
  for (Index r = 0; r < T; ++r)
    for (Index c = 0; c < p.values.cols(); ++c)
      p.values(r, c) = ys.rows[keep[static_cast<std::size_t>(r)]][static_cast<std::size_t>(c)];
  if (fs) {
    Matrix F(T, static_cast<Index>(fs->header.size()));
    for (Index r = 0; r < T; ++r)
      for (Index c = 0; c < F.cols(); ++c) F(r, c) = fs->rows[keep[static_cast<std::size_t>(r)]][static_cast<std::size_t>(c)];
    p.covariates = std::move(F);
  }
  return p;
}

SeriesPanel load_panel(const std::string& series_path, const std::optional<std::string>& covariate_path) {
  std::ifstream ys(series_path);
  if (!ys) throw ValidationError("cannot open '" + series_path + "'");
  if (!covariate_path) return read_panel(ys);
  std::ifstream fs(*covariate_path);
  if (!fs) throw ValidationError("cannot open '" + *covariate_path + "'");
  return read_panel(ys, &fs);
}

Matrix residualize(const Matrix& Y, const Matrix& F) {
  if (F.rows() != Y.rows()) throw ValidationError("covariates and series have different lengths");
  Matrix D(Y.rows(), F.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(F.cols()) = F;
  const Matrix G = D.transpose() * D;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-12 * lmax)) throw ValidationError("rank-deficient covariates");
  const Matrix beta = G.ldlt().solve(D.transpose() * Y);
  return Y - D * beta;
}

AdjacencyMatrix correlation_network(const SeriesPanel& panel, double threshold, bool residualize_first) {
  if (panel.values.rows() < 3) throw ValidationError("need at least three observations");
  if (std::isnan(threshold)) throw ValidationError("threshold must be a number");
  Matrix Z = panel.values;
  if (residualize_first) {
    if (!panel.covariates) throw ValidationError("residualization requested without covariates");
    Z = residualize(Z, *panel.covariates);
  }
  const Matrix R = kernels::omp::pearson(Z);
  AdjacencyMatrix adj;
  adj.self_loops = false;
  const Index n = R.rows();
  adj.X = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && std::fabs(R(i, j)) >= threshold) adj.X(i, j) = 1.0;
  return adj;
}

}  // namespace simplerc
