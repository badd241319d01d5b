#pragma once

#include "dmon/common.hpp"
#include "dmon/metrics.hpp"
#include "dmon/model.hpp"
#include "dmon/sparse_graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dmon {

enum class Method { dmon, kmeans, spectral };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

// Per-run knobs shared by the command-line tool and the experiment
// harnesses. hidden/epochs/lr/dropout apply to dmon only.
struct RunConfig {
  Method method = Method::dmon;
  int k = 16;
  int hidden = 64;
  int epochs = 200;
  double lr = 1e-3;
  double dropout = 0.5;
  std::uint64_t seed = 0;
};

struct RunOutput {
  HardPartition partition;
  std::vector<LossBreakdown> history;  // empty for the baselines
};

// Runs one method on one graph. features may be null for spectral; dmon
// and kmeans require it (ConfigError otherwise).
RunOutput run_method(const RunConfig& cfg, const SparseGraph& g, const FeatureMatrix* features);

// Graph metrics always; label metrics only when ground truth is present.
MetricsReport evaluate(const SparseGraph& g, const HardPartition& pred,
                       const HardPartition* truth);

}  // namespace dmon
