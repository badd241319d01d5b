#pragma once

#include "dmon/common.hpp"
#include "dmon/sparse_graph.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dmon {

// Hard cluster assignment: ids in [0, k).
struct HardPartition {
  std::vector<int> assignments;
  int k = 1;

  HardPartition() = default;
  explicit HardPartition(std::vector<int> ids);
  HardPartition(std::vector<int> ids, int k_clusters);

  std::size_t size() const { return assignments.size(); }
};

// Clustering quality summary. Values are stored on their natural scale
// (conductance/nmi/f1 in [0,1], modularity in (-0.5, 1]); serialization
// multiplies by 100 to match the usual reporting convention.
struct MetricsReport {
  double conductance = 0.0;
  double modularity = 0.0;
  std::optional<double> nmi;
  std::optional<double> f1;

  static std::string csv_header();  // "conductance,modularity,nmi,f1"
  std::string to_csv_row() const;   // x100, 1 decimal place
  static MetricsReport from_csv_row(const std::string& row);
  std::string to_json() const;      // x100, full precision
};

// Newman modularity Q of a hard partition, computed per cluster from
// internal edge ends and degree volumes. Throws NumericError when m = 0.
double modularity(const SparseGraph& g, const HardPartition& p);

// Literal double sum over all ordered node pairs; test oracle for the
// per-cluster route and the soft modularity loss. Guarded to n <= 2000.
double brute_force_modularity(const SparseGraph& g, const HardPartition& p);

// Unweighted mean of per-cluster conductance cut/(2*m_inside + cut) over
// non-empty clusters; a cluster with no incident edges contributes 0.
double mean_conductance(const SparseGraph& g, const HardPartition& p);

// Mutual information normalized by the arithmetic mean of the entropies,
// natural logs. 1 if both partitions are constant, 0 if exactly one is.
double nmi(const HardPartition& pred, const HardPartition& truth);

// F1 over unordered node pairs (positive = co-clustered), via contingency
// counts. F1 = 0 when precision + recall = 0.
double pairwise_f1(const HardPartition& pred, const HardPartition& truth);

// Mean and (population) standard deviation across per-seed reports.
// Label metrics aggregate only when present in every report.
struct AggregateReport {
  MetricsReport mean;
  MetricsReport stddev;
};
AggregateReport aggregate_reports(const std::vector<MetricsReport>& reports);

}  // namespace dmon
