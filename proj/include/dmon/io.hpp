#pragma once

#include "dmon/common.hpp"
#include "dmon/metrics.hpp"

#include <filesystem>
#include <optional>

namespace dmon {

// CSV feature matrix, one node per row. `has_header` skips the first line.
FeatureMatrix load_features(const std::filesystem::path& path, bool has_header = false);
void save_features(const std::filesystem::path& path, const FeatureMatrix& x);

// One integer cluster id per line, aligned with node index.
HardPartition load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const HardPartition& p);

}  // namespace dmon
