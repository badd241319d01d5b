#pragma once

#include "dmon/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dmon {

// Immutable undirected graph in CSR form. The adjacency is symmetric,
// self-loop free and duplicate free; degrees are cached from row lengths.
class SparseGraph {
 public:
  SparseGraph() = default;

  // Builds from an arbitrary edge list: symmetrizes, collapses duplicates,
  // drops self-loops. Ids must lie in [0, n).
  static SparseGraph from_edges(std::int64_t n,
                                const std::vector<std::pair<std::int64_t, std::int64_t>>& edges);

  std::int64_t n() const { return n_; }
  std::int64_t m() const { return m_; }

  const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::int64_t>& col_indices() const { return col_indices_; }

  std::span<const std::int64_t> neighbors(std::int64_t u) const {
    return {col_indices_.data() + row_offsets_[u],
            col_indices_.data() + row_offsets_[u + 1]};
  }

  std::int64_t degree(std::int64_t u) const { return row_offsets_[u + 1] - row_offsets_[u]; }

  // Degree vector as doubles, ready for the modularity formulas.
  const Vector& degrees() const { return degrees_; }

  // A * x for dense x with n rows. Accumulates in CSR order per row.
  DenseMatrix spmm(const DenseMatrix& x) const;
  Vector times(const Vector& x) const;

  bool has_edge(std::int64_t u, std::int64_t v) const;

 private:
  std::int64_t n_ = 0;
  std::int64_t m_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<std::int64_t> col_indices_;
  Vector degrees_;
};

// D^{-1/2} A D^{-1/2} over the same CSR structure. Rows of isolated nodes
// are all-zero (d^{-1/2} := 0 for zero-degree nodes).
class NormalizedAdjacency {
 public:
  explicit NormalizedAdjacency(const SparseGraph& g);

  std::int64_t n() const { return n_; }
  const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::int64_t>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix spmm(const DenseMatrix& x) const;

 private:
  std::int64_t n_ = 0;
  std::vector<std::int64_t> row_offsets_;
  std::vector<std::int64_t> col_indices_;
  std::vector<double> values_;
};

struct EdgeListStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_collapsed = 0;
};

// Whitespace-separated "u v" pairs, 0-indexed, '#' comment lines ignored.
// Throws ConfigError on malformed lines (with line number) and on ids
// outside a declared n_hint.
SparseGraph load_edge_list(const std::filesystem::path& path,
                           std::optional<std::int64_t> n_hint = std::nullopt,
                           EdgeListStats* stats = nullptr);

void save_edge_list(const std::filesystem::path& path, const SparseGraph& g);

}  // namespace dmon
