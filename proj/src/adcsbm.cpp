#include "dmon/adcsbm.hpp"

#include "dmon/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dmon {

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::matched: return "matched";
    case FeatureMode::nested: return "nested";
    case FeatureMode::grouped: return "grouped";
  }
  throw ConfigError("unknown feature mode");
}

FeatureMode feature_mode_from_string(const std::string& name) {
  if (name == "matched") return FeatureMode::matched;
  if (name == "nested") return FeatureMode::nested;
  if (name == "grouped") return FeatureMode::grouped;
  throw ConfigError("unknown feature mode '" + name + "'");
}

void AdcSbmConfig::validate() const {
  if (n < 1) throw ConfigError("n must be positive");
  if (k < 2) throw ConfigError("k must be at least 2");
  if (d_out > d) throw ConfigError("infeasible config: d_out exceeds d");
  if (d_out < 0.0 || d < 0.0) throw ConfigError("degrees must be non-negative");
  if (d_min <= 0.0) throw ConfigError("d_min must be positive");
  if (d_min > d_max) throw ConfigError("d_min exceeds d_max");
  if (s < 1) throw ConfigError("s must be positive");
  if (k_f < 1) throw ConfigError("k_f must be positive");
  if (sigma_c < 0.0 || sigma < 0.0) throw ConfigError("stds must be non-negative");
  switch (feature_mode) {
    case FeatureMode::matched:
      if (k_f != k) throw ConfigError("matched features require k_f = k");
      break;
    case FeatureMode::nested:
      if (k_f % k != 0) throw ConfigError("nested features require k_f a multiple of k");
      break;
    case FeatureMode::grouped:
      if (k % k_f != 0) throw ConfigError("grouped features require k a multiple of k_f");
      break;
  }
}

std::string AdcSbmConfig::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["k"] = k;
  j["d"] = d;
  j["d_out"] = d_out;
  j["d_min"] = d_min;
  j["d_max"] = d_max;
  j["alpha"] = alpha;
  j["s"] = s;
  j["k_f"] = k_f;
  j["feature_mode"] = to_string(feature_mode);
  j["sigma_c"] = sigma_c;
  j["sigma"] = sigma;
  j["seed"] = seed;
  return j.dump(2);
}

AdcSbmConfig AdcSbmConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed config json: ") + e.what());
  }
  AdcSbmConfig cfg;
  try {
    cfg.n = j.at("n").get<std::int64_t>();
    cfg.k = j.at("k").get<int>();
    cfg.d = j.at("d").get<double>();
    cfg.d_out = j.at("d_out").get<double>();
    cfg.d_min = j.at("d_min").get<double>();
    cfg.d_max = j.at("d_max").get<double>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.s = j.at("s").get<int>();
    cfg.k_f = j.at("k_f").get<int>();
    cfg.feature_mode = feature_mode_from_string(j.at("feature_mode").get<std::string>());
    cfg.sigma_c = j.at("sigma_c").get<double>();
    cfg.sigma = j.at("sigma").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config json missing or mistyped field: ") + e.what());
  }
  return cfg;
}

namespace {

// Inverse-CDF draw from p(t) ~ t^-alpha truncated to [lo, hi].
double truncated_power_law(double lo, double hi, double alpha, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (lo == hi) return lo;
  if (std::abs(alpha - 1.0) < 1e-12) {
    return lo * std::pow(hi / lo, u);
  }
  const double e = 1.0 - alpha;
  const double a = std::pow(lo, e);
  const double b = std::pow(hi, e);
  return std::pow(a + u * (b - a), 1.0 / e);
}

// Node draw proportional to propensity, via inclusive prefix sums.
struct BlockSampler {
  std::vector<std::int64_t> members;
  std::vector<double> cumulative;

  std::int64_t draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t = unif(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), t);
    std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
    if (idx >= members.size()) idx = members.size() - 1;
    return members[idx];
  }
};

}  // namespace

SyntheticInstance generate(const AdcSbmConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);

  // Memberships uniform at random over the k clusters.
  std::uniform_int_distribution<int> pick_cluster(0, cfg.k - 1);
  std::vector<int> labels(static_cast<std::size_t>(cfg.n));
  for (auto& l : labels) l = pick_cluster(rng);

  // Per-node degree propensities, normalized within each block so they act
  // as endpoint probabilities.
  std::vector<BlockSampler> blocks(static_cast<std::size_t>(cfg.k));
  {
    std::vector<double> theta(static_cast<std::size_t>(cfg.n));
    for (auto& t : theta) t = truncated_power_law(cfg.d_min, cfg.d_max, cfg.alpha, rng);
    for (std::int64_t i = 0; i < cfg.n; ++i) {
      blocks[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].members.push_back(i);
    }
    for (auto& block : blocks) {
      block.cumulative.reserve(block.members.size());
      double run = 0.0;
      for (std::int64_t node : block.members) {
        run += theta[static_cast<std::size_t>(node)];
        block.cumulative.push_back(run);
      }
    }
  }

  // Expected edge counts: each node carries d_out expected edges toward
  // every foreign block, the remainder of its expected degree d internal.
  // When (k-1)*d_out exceeds d the cross-cluster share saturates at d, so
  // the average degree always stays at d.
  const double inter_total = std::min(cfg.d_out * static_cast<double>(cfg.k - 1), cfg.d);
  const double inter_per_block = inter_total / static_cast<double>(cfg.k - 1);
  const double intra = cfg.d - inter_total;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  edges.reserve(static_cast<std::size_t>(static_cast<double>(cfg.n) * cfg.d / 2.0 * 1.2) + 16);
  for (int a = 0; a < cfg.k; ++a) {
    const double n_a = static_cast<double>(blocks[static_cast<std::size_t>(a)].members.size());
    for (int b = a; b < cfg.k; ++b) {
      const double n_b = static_cast<double>(blocks[static_cast<std::size_t>(b)].members.size());
      double expected = 0.0;
      if (a == b) {
        expected = n_a * intra / 2.0;
      } else {
        expected = (n_a + n_b) / 2.0 * inter_per_block;
      }
      if (expected <= 0.0 || n_a == 0.0 || n_b == 0.0) continue;
      std::poisson_distribution<std::int64_t> count(expected);
      const std::int64_t draws = count(rng);
      for (std::int64_t e = 0; e < draws; ++e) {
        std::int64_t u = blocks[static_cast<std::size_t>(a)].draw(rng);
        std::int64_t v = blocks[static_cast<std::size_t>(b)].draw(rng);
        edges.emplace_back(u, v);
      }
    }
  }

  SyntheticInstance out;
  out.graph = SparseGraph::from_edges(cfg.n, edges);  // collapses dups, drops loops
  out.graph_labels = HardPartition(labels, cfg.k);
  FeatureSample fs = sample_features(out.graph_labels, cfg, rng);
  out.features = std::move(fs.features);
  out.feature_labels = std::move(fs.feature_labels);
  return out;
}

FeatureSample sample_features(const HardPartition& graph_labels, const AdcSbmConfig& cfg,
                              std::mt19937_64& rng) {
  cfg.validate();
  const std::int64_t n = static_cast<std::int64_t>(graph_labels.size());

  std::vector<int> feature_ids(static_cast<std::size_t>(n));
  switch (cfg.feature_mode) {
    case FeatureMode::matched:
      feature_ids = graph_labels.assignments;
      break;
    case FeatureMode::nested: {
      // Each graph cluster splits uniformly at random into k_f/k sub-clusters.
      const int per = cfg.k_f / cfg.k;
      std::uniform_int_distribution<int> pick_sub(0, per - 1);
      for (std::int64_t i = 0; i < n; ++i) {
        const int g = graph_labels.assignments[static_cast<std::size_t>(i)];
        feature_ids[static_cast<std::size_t>(i)] = g * per + pick_sub(rng);
      }
      break;
    }
    case FeatureMode::grouped: {
      // Consecutive graph clusters merge in groups of k/k_f.
      const int per = cfg.k / cfg.k_f;
      for (std::int64_t i = 0; i < n; ++i) {
        feature_ids[static_cast<std::size_t>(i)] =
            graph_labels.assignments[static_cast<std::size_t>(i)] / per;
      }
      break;
    }
  }

  // normal_distribution forbids a zero stddev; treat it as a point mass
  std::normal_distribution<double> center_dist(0.0, cfg.sigma_c > 0.0 ? cfg.sigma_c : 1.0);
  DenseMatrix centers(cfg.k_f, cfg.s);
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < centers.cols(); ++j)
      centers(i, j) = cfg.sigma_c > 0.0 ? center_dist(rng) : 0.0;

  std::normal_distribution<double> noise(0.0, cfg.sigma > 0.0 ? cfg.sigma : 1.0);
  FeatureSample out;
  out.features.resize(n, cfg.s);
  for (std::int64_t i = 0; i < n; ++i) {
    const int f = feature_ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < cfg.s; ++j) {
      out.features(i, j) = centers(f, j) + (cfg.sigma > 0.0 ? noise(rng) : 0.0);
    }
  }
  out.feature_labels = HardPartition(std::move(feature_ids), cfg.k_f);
  return out;
}

double detectability_threshold(const AdcSbmConfig& cfg) {
  const double raw = (cfg.d - static_cast<double>(cfg.k) * std::sqrt(cfg.d)) / 2.0;
  return std::max(0.0, raw);
}

namespace {

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out;
  if (points <= 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < points; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> logspace(double lo, double hi, int points) {
  std::vector<double> out = linspace(std::log(lo), std::log(hi), points);
  for (auto& v : out) v = std::exp(v);
  out.front() = lo;
  if (points > 1) out.back() = hi;
  return out;
}

}  // namespace

std::string scenario_param_name(int scenario) {
  switch (scenario) {
    case 1: return "d_out";
    case 2:
    case 3:
    case 4: return "sigma_c";
    case 5: return "d";
    case 6: return "d_max";
    default: throw ConfigError("scenario must be in 1..6");
  }
}

std::vector<ScenarioPoint> scenario_grid(int scenario, int grid_points) {
  if (scenario < 1 || scenario > 6) throw ConfigError("scenario must be in 1..6");
  if (grid_points < 1) throw ConfigError("grid_points must be positive");

  std::vector<double> values;
  switch (scenario) {
    case 1: values = linspace(2.0, 5.0, grid_points); break;
    case 2:
    case 3:
    case 4: values = logspace(1e-2, 1e1, grid_points); break;
    case 5: values = logspace(4.0, 128.0, grid_points); break;
    case 6: values = logspace(4.0, 1024.0, grid_points); break;
  }

  std::vector<ScenarioPoint> out;
  out.reserve(values.size());
  for (double v : values) {
    ScenarioPoint point;
    point.param_value = v;
    AdcSbmConfig& cfg = point.config;
    switch (scenario) {
      case 1: cfg.d_out = v; break;
      case 2: cfg.sigma_c = v; break;
      case 3:
        cfg.sigma_c = v;
        cfg.feature_mode = FeatureMode::nested;
        cfg.k_f = 2 * cfg.k;
        break;
      case 4:
        cfg.sigma_c = v;
        cfg.feature_mode = FeatureMode::grouped;
        cfg.k_f = cfg.k / 2;
        break;
      case 5: cfg.d = v; break;
      case 6: cfg.d_max = v; break;
    }
    cfg.validate();
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<SweepEntry> scenario_sweep(int scenario, int grid_points, int seeds,
                                       std::uint64_t base_seed) {
  if (seeds < 1) throw ConfigError("seeds must be positive");
  std::vector<ScenarioPoint> grid = scenario_grid(scenario, grid_points);
  std::vector<SweepEntry> out;
  out.reserve(grid.size() * static_cast<std::size_t>(seeds));
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (int si = 0; si < seeds; ++si) {
      SweepEntry entry;
      entry.config = grid[gi].config;
      entry.param_value = grid[gi].param_value;
      entry.config.seed =
          base_seed + static_cast<std::uint64_t>(gi) * static_cast<std::uint64_t>(seeds) +
          static_cast<std::uint64_t>(si);
      entry.instance = generate(entry.config);
      out.push_back(std::move(entry));
    }
  }
  return out;
}

void write_instance(const std::filesystem::path& dir, const AdcSbmConfig& cfg,
                    const SyntheticInstance& instance) {
  std::filesystem::create_directories(dir);
  save_edge_list(dir / "edges.tsv", instance.graph);
  save_features(dir / "features.csv", instance.features);
  save_labels(dir / "graph_labels.txt", instance.graph_labels);
  save_labels(dir / "feature_labels.txt", instance.feature_labels);
  std::ofstream out(dir / "config.json");
  if (!out) throw ConfigError("cannot write " + (dir / "config.json").string());
  out << cfg.to_json() << '\n';
}

StoredInstance read_instance(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw ConfigError("cannot open " + (dir / "config.json").string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  StoredInstance out;
  out.config = AdcSbmConfig::from_json(text);
  out.instance.graph = load_edge_list(dir / "edges.tsv", out.config.n);
  out.instance.features = load_features(dir / "features.csv");
  out.instance.graph_labels =
      HardPartition(load_labels(dir / "graph_labels.txt").assignments, out.config.k);
  out.instance.feature_labels =
      HardPartition(load_labels(dir / "feature_labels.txt").assignments, out.config.k_f);
  if (out.instance.features.rows() != out.config.n ||
      static_cast<std::int64_t>(out.instance.graph_labels.size()) != out.config.n ||
      static_cast<std::int64_t>(out.instance.feature_labels.size()) != out.config.n)
    throw ConfigError("instance files in " + dir.string() + " disagree on node count");
  return out;
}

}  // namespace dmon
