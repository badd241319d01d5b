#pragma once

#include "dmon/common.hpp"
#include "dmon/metrics.hpp"
#include "dmon/sparse_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace dmon {

// Relation between feature clusters and graph clusters.
enum class FeatureMode { matched, nested, grouped };

std::string to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& name);

// Attributed degree-corrected stochastic block model parameters.
struct AdcSbmConfig {
  std::int64_t n = 1000;  // nodes
  int k = 4;              // graph clusters
  double d = 20.0;        // expected average degree
  double d_out = 2.0;     // expected sub-degree toward each foreign cluster
  double d_min = 2.0;     // power-law lower bound for degree propensities
  double d_max = 4.0;     // power-law upper bound
  double alpha = 2.0;     // power-law exponent, p(theta) ~ theta^-alpha
  int s = 32;             // feature dimensions
  int k_f = 4;            // feature clusters
  FeatureMode feature_mode = FeatureMode::matched;
  double sigma_c = 3.0;   // center std
  double sigma = 1.0;     // within-cluster std
  std::uint64_t seed = 0;

  // Throws ConfigError on infeasible parameters (d_out > d, d_min > d_max,
  // k < 2, or a feature mode whose k_f does not divide/multiply k).
  void validate() const;

  std::string to_json() const;
  static AdcSbmConfig from_json(const std::string& text);
};

struct SyntheticInstance {
  SparseGraph graph;
  FeatureMatrix features;
  HardPartition graph_labels;
  HardPartition feature_labels;
};

struct FeatureSample {
  FeatureMatrix features;
  HardPartition feature_labels;
};

// Samples the graph blockwise (Poisson edge counts, propensity-weighted
// endpoints), collapses multi-edges, drops self-loops, then attaches
// Gaussian features. Deterministic given cfg.seed.
SyntheticInstance generate(const AdcSbmConfig& cfg);

// Feature cluster labels derived from graph labels per cfg.feature_mode,
// k_f centers from N(0, sigma_c^2 I), node features from N(center, sigma^2 I).
FeatureSample sample_features(const HardPartition& graph_labels, const AdcSbmConfig& cfg,
                              std::mt19937_64& rng);

// d_out at which the within/between degree gap hits the spectral detection
// limit d_in - d_out = k*sqrt(d); clamped at 0 when the formula goes negative.
double detectability_threshold(const AdcSbmConfig& cfg);

// Benchmark scenarios: each sweeps one parameter away from the defaults.
//   1: d_out linear in [2, 5]          (cluster mixing)
//   2: sigma_c log in [1e-2, 1e1], matched feature clusters
//   3: same range, nested
//   4: same range, grouped
//   5: d log in [4, 128]               (graph density)
//   6: d_max log in [4, 1024]          (propensity tail)
struct ScenarioPoint {
  AdcSbmConfig config;
  double param_value = 0.0;
};

// Name of the swept parameter, e.g. "d_out" for scenario 1.
std::string scenario_param_name(int scenario);

// Configs for one scenario, seeds not yet assigned.
std::vector<ScenarioPoint> scenario_grid(int scenario, int grid_points);

struct SweepEntry {
  AdcSbmConfig config;
  double param_value = 0.0;
  SyntheticInstance instance;
};

// grid x seeds generated instances; replicate j of grid point i gets
// seed base_seed + i*seeds + j.
std::vector<SweepEntry> scenario_sweep(int scenario, int grid_points, int seeds,
                                       std::uint64_t base_seed = 0);

// Instance directory layout: edges.tsv, features.csv, graph_labels.txt,
// feature_labels.txt, config.json.
void write_instance(const std::filesystem::path& dir, const AdcSbmConfig& cfg,
                    const SyntheticInstance& instance);

struct StoredInstance {
  AdcSbmConfig config;
  SyntheticInstance instance;
};
StoredInstance read_instance(const std::filesystem::path& dir);

}  // namespace dmon
