#include "dmon/sparse_graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace dmon {

SparseGraph SparseGraph::from_edges(
    std::int64_t n, const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
  if (n < 0) throw ConfigError("node count must be non-negative");
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw ConfigError("edge endpoint " + std::to_string(u >= n || u < 0 ? u : v) +
                        " out of range for n=" + std::to_string(n));
    }
  }

  // Symmetrize and canonicalize, then dedupe.
  std::vector<std::pair<std::int64_t, std::int64_t>> sym;
  sym.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    sym.emplace_back(u, v);
    sym.emplace_back(v, u);
  }
  std::sort(sym.begin(), sym.end());
  sym.erase(std::unique(sym.begin(), sym.end()), sym.end());

  SparseGraph g;
  g.n_ = n;
  g.m_ = static_cast<std::int64_t>(sym.size()) / 2;
  g.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.col_indices_.reserve(sym.size());
  for (const auto& [u, v] : sym) {
    g.row_offsets_[static_cast<std::size_t>(u) + 1]++;
    g.col_indices_.push_back(v);
  }
  for (std::size_t i = 1; i < g.row_offsets_.size(); ++i) {
    g.row_offsets_[i] += g.row_offsets_[i - 1];
  }
  g.degrees_ = Vector::Zero(n);
  for (std::int64_t u = 0; u < n; ++u) {
    g.degrees_[u] = static_cast<double>(g.row_offsets_[u + 1] - g.row_offsets_[u]);
  }
  return g;
}

DenseMatrix SparseGraph::spmm(const DenseMatrix& x) const {
  if (x.rows() != n_) throw ConfigError("spmm: row count mismatch");
  DenseMatrix out = DenseMatrix::Zero(n_, x.cols());
  for (std::int64_t u = 0; u < n_; ++u) {
    auto row = out.row(u);
    for (std::int64_t e = row_offsets_[u]; e < row_offsets_[u + 1]; ++e) {
      row += x.row(col_indices_[e]);
    }
  }
  return out;
}

Vector SparseGraph::times(const Vector& x) const {
  if (x.size() != n_) throw ConfigError("matvec: length mismatch");
  Vector out = Vector::Zero(n_);
  for (std::int64_t u = 0; u < n_; ++u) {
    double acc = 0.0;
    for (std::int64_t e = row_offsets_[u]; e < row_offsets_[u + 1]; ++e) {
      acc += x[col_indices_[e]];
    }
    out[u] = acc;
  }
  return out;
}

bool SparseGraph::has_edge(std::int64_t u, std::int64_t v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

NormalizedAdjacency::NormalizedAdjacency(const SparseGraph& g)
    : n_(g.n()), row_offsets_(g.row_offsets()), col_indices_(g.col_indices()) {
  Vector inv_sqrt(n_);
  for (std::int64_t u = 0; u < n_; ++u) {
    const double d = g.degrees()[u];
    inv_sqrt[u] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  values_.resize(col_indices_.size());
  for (std::int64_t u = 0; u < n_; ++u) {
    for (std::int64_t e = row_offsets_[u]; e < row_offsets_[u + 1]; ++e) {
      values_[e] = inv_sqrt[u] * inv_sqrt[col_indices_[e]];
    }
  }
}

DenseMatrix NormalizedAdjacency::spmm(const DenseMatrix& x) const {
  if (x.rows() != n_) throw ConfigError("spmm: row count mismatch");
  DenseMatrix out = DenseMatrix::Zero(n_, x.cols());
  for (std::int64_t u = 0; u < n_; ++u) {
    auto row = out.row(u);
    for (std::int64_t e = row_offsets_[u]; e < row_offsets_[u + 1]; ++e) {
      row += values_[e] * x.row(col_indices_[e]);
    }
  }
  return out;
}

namespace {

bool parse_id(std::string_view tok, std::int64_t& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

SparseGraph load_edge_list(const std::filesystem::path& path,
                           std::optional<std::int64_t> n_hint, EdgeListStats* stats) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list: " + path.string());

  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  std::int64_t max_id = -1;
  std::size_t self_loops = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t' || sv.front() == '\r')) {
      sv.remove_prefix(1);
    }
    if (sv.empty() || sv.front() == '#') continue;

    std::istringstream ss{std::string(sv)};
    std::string a, b, extra;
    ss >> a >> b;
    std::int64_t u = 0, v = 0;
    if (!ss || !parse_id(a, u) || !parse_id(b, v) || (ss >> extra)) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed edge line '" + line + "'");
    }
    if (u < 0 || v < 0) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": negative node id");
    }
    if (n_hint && (u >= *n_hint || v >= *n_hint)) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": node id " +
                        std::to_string(std::max(u, v)) + " >= declared n=" +
                        std::to_string(*n_hint));
    }
    if (u == v) {
      ++self_loops;
      max_id = std::max(max_id, u);
      continue;
    }
    edges.emplace_back(u, v);
    max_id = std::max({max_id, u, v});
  }

  const std::int64_t n = n_hint.value_or(max_id + 1);
  const std::size_t raw = edges.size();
  SparseGraph g = SparseGraph::from_edges(n, edges);
  if (self_loops > 0) {
    std::cerr << "warning: dropped " << self_loops << " self-loop(s) from " << path.string()
              << "\n";
  }
  if (stats) {
    stats->self_loops_dropped = self_loops;
    // Undirected duplicates: raw input pairs minus surviving undirected edges.
    stats->duplicates_collapsed = raw - static_cast<std::size_t>(g.m());
  }
  return g;
}

void save_edge_list(const std::filesystem::path& path, const SparseGraph& g) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write edge list: " + path.string());
  for (std::int64_t u = 0; u < g.n(); ++u) {
    for (std::int64_t v : g.neighbors(u)) {
      if (u < v) out << u << "\t" << v << "\n";
    }
  }
}

}  // namespace dmon
