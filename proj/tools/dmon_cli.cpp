// Command-line front end: synthetic benchmark generation, clustering with
// any of the three methods, scenario sweeps, and metrics evaluation.

#include "dmon/adcsbm.hpp"
#include "dmon/baselines.hpp"
#include "dmon/io.hpp"
#include "dmon/metrics.hpp"
#include "dmon/model.hpp"
#include "dmon/pipeline.hpp"
#include "dmon/sparse_graph.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out_dir = ".";
  std::string format = "csv";
};

// Directory layout shared by synthetic instances and ingested datasets:
// edges.tsv plus optional features.csv / graph_labels.txt / config.json.
struct Dataset {
  dmon::SparseGraph graph;
  std::optional<dmon::FeatureMatrix> features;
  std::optional<dmon::HardPartition> truth;
  std::optional<dmon::AdcSbmConfig> config;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw dmon::ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw dmon::ConfigError(dir.string() + " is not a directory");
  Dataset ds;
  std::optional<std::int64_t> n_hint;
  if (fs::exists(dir / "config.json")) {
    ds.config = dmon::AdcSbmConfig::from_json(slurp(dir / "config.json"));
    n_hint = ds.config->n;
  }
  const fs::path edges = dir / "edges.tsv";
  if (!fs::exists(edges)) throw dmon::ConfigError("no edges.tsv in " + dir.string());
  ds.graph = dmon::load_edge_list(edges, n_hint);

  if (fs::exists(dir / "features.csv")) {
    ds.features = dmon::load_features(dir / "features.csv");
    if (ds.features->rows() != ds.graph.n()) {
      // Trailing isolated nodes are invisible to the edge list; the feature
      // row count is authoritative when no config pinned n.
      if (!n_hint && ds.features->rows() > ds.graph.n()) {
        ds.graph = dmon::load_edge_list(edges, ds.features->rows());
      } else {
        throw dmon::ConfigError("features.csv has " + std::to_string(ds.features->rows()) +
                                " rows but the graph has " + std::to_string(ds.graph.n()) +
                                " nodes");
      }
    }
  }
  if (fs::exists(dir / "graph_labels.txt")) {
    dmon::HardPartition truth = dmon::load_labels(dir / "graph_labels.txt");
    if (static_cast<std::int64_t>(truth.size()) != ds.graph.n())
      throw dmon::ConfigError("graph_labels.txt length does not match node count");
    ds.truth = std::move(truth);
  }
  return ds;
}

void write_report(const fs::path& stem, const std::string& format,
                  const dmon::MetricsReport& report) {
  const fs::path path = fs::path(stem).concat("." + format);
  std::ofstream out(path);
  if (!out) throw dmon::ConfigError("cannot write " + path.string());
  if (format == "csv") {
    out << dmon::MetricsReport::csv_header() << '\n' << report.to_csv_row() << '\n';
  } else {
    out << report.to_json() << '\n';
  }
}

std::string describe(const dmon::MetricsReport& r) {
  char buf[160];
  std::string line;
  std::snprintf(buf, sizeof buf, "conductance=%.1f modularity=%.1f", 100.0 * r.conductance,
                100.0 * r.modularity);
  line = buf;
  if (r.nmi) {
    std::snprintf(buf, sizeof buf, " nmi=%.1f", 100.0 * *r.nmi);
    line += buf;
  }
  if (r.f1) {
    std::snprintf(buf, sizeof buf, " f1=%.1f", 100.0 * *r.f1);
    line += buf;
  }
  return line;
}

void print_instance_summary(const fs::path& dir, const dmon::SparseGraph& g) {
  const double mean_degree =
      g.n() > 0 ? 2.0 * static_cast<double>(g.m()) / static_cast<double>(g.n()) : 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", mean_degree);
  std::cout << dir.string() << ": n=" << g.n() << " m=" << g.m() << " mean_degree=" << buf
            << "\n";
}

void cmd_generate(const GlobalOpts& global, bool seed_given, int scenario, int points,
                  int instance_seeds, const std::string& config_path) {
  if (scenario > 0) {
    const auto grid = dmon::scenario_grid(scenario, points);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      for (int si = 0; si < instance_seeds; ++si) {
        dmon::AdcSbmConfig cfg = grid[gi].config;
        cfg.seed = global.seed +
                   static_cast<std::uint64_t>(gi) * static_cast<std::uint64_t>(instance_seeds) +
                   static_cast<std::uint64_t>(si);
        dmon::SyntheticInstance inst = dmon::generate(cfg);
        const fs::path dir = fs::path(global.out_dir) /
                             ("scenario" + std::to_string(scenario)) /
                             ("p" + std::to_string(gi) + "_s" + std::to_string(si));
        dmon::write_instance(dir, cfg, inst);
        print_instance_summary(dir, inst.graph);
      }
    }
    return;
  }

  dmon::AdcSbmConfig cfg;
  if (!config_path.empty()) cfg = dmon::AdcSbmConfig::from_json(slurp(config_path));
  if (seed_given || config_path.empty()) cfg.seed = global.seed;
  dmon::SyntheticInstance inst = dmon::generate(cfg);
  dmon::write_instance(global.out_dir, cfg, inst);
  print_instance_summary(global.out_dir, inst.graph);
}

void cmd_cluster(const GlobalOpts& global, const std::string& input, const std::string& method,
                 int k, int hidden, int epochs, double lr, double dropout, int n_seeds) {
  Dataset ds = load_dataset(input);
  fs::create_directories(global.out_dir);

  dmon::RunConfig rc;
  rc.method = dmon::method_from_string(method);
  rc.k = k;
  rc.hidden = hidden > 0 ? hidden : (ds.config ? 64 : 512);
  rc.epochs = epochs;
  rc.lr = lr;
  rc.dropout = dropout;

  const dmon::FeatureMatrix* features = ds.features ? &*ds.features : nullptr;
  const dmon::HardPartition* truth = ds.truth ? &*ds.truth : nullptr;

  std::vector<dmon::MetricsReport> reports;
  for (int i = 0; i < n_seeds; ++i) {
    rc.seed = global.seed + static_cast<std::uint64_t>(i);
    dmon::RunOutput out = dmon::run_method(rc, ds.graph, features);
    dmon::MetricsReport report = dmon::evaluate(ds.graph, out.partition, truth);
    reports.push_back(report);

    const std::string tag = "seed" + std::to_string(rc.seed);
    dmon::save_labels(fs::path(global.out_dir) / ("partition_" + tag + ".txt"), out.partition);
    write_report(fs::path(global.out_dir) / ("metrics_" + tag), global.format, report);
    if (!out.history.empty()) {
      dmon::save_loss_history(fs::path(global.out_dir) / ("loss_" + tag + ".csv"), out.history);
    }
    std::cout << "seed " << rc.seed << ": " << describe(report) << "\n";
  }

  dmon::AggregateReport agg = dmon::aggregate_reports(reports);
  write_report(fs::path(global.out_dir) / "metrics_mean", global.format, agg.mean);
  write_report(fs::path(global.out_dir) / "metrics_stddev", global.format, agg.stddev);
  std::cout << "mean over " << n_seeds << " seeds: " << describe(agg.mean) << "\n";
  std::cout << "stddev: " << describe(agg.stddev) << "\n";
}

void cmd_sweep(const GlobalOpts& global, int scenario, int points, int n_seeds,
               const std::string& methods_arg, int hidden, int epochs) {
  std::vector<std::string> methods;
  {
    std::stringstream ss(methods_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) methods.push_back(tok);
    }
    if (methods.empty()) throw dmon::ConfigError("no methods given");
    for (const auto& m : methods) dmon::method_from_string(m);  // validate early
  }

  fs::create_directories(global.out_dir);
  const auto grid = dmon::scenario_grid(scenario, points);

  struct Row {
    double param;
    std::uint64_t seed;
    std::string method;
    dmon::MetricsReport report;
    double threshold;
    bool has_threshold;
  };
  std::vector<Row> rows;

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (int si = 0; si < n_seeds; ++si) {
      dmon::AdcSbmConfig cfg = grid[gi].config;
      cfg.seed = global.seed +
                 static_cast<std::uint64_t>(gi) * static_cast<std::uint64_t>(n_seeds) +
                 static_cast<std::uint64_t>(si);
      dmon::SyntheticInstance inst = dmon::generate(cfg);

      for (const std::string& method : methods) {
        dmon::RunConfig rc;
        rc.method = dmon::method_from_string(method);
        rc.k = cfg.k;
        rc.hidden = hidden;
        rc.epochs = epochs;
        rc.seed = cfg.seed;
        dmon::RunOutput out = dmon::run_method(rc, inst.graph, &inst.features);
        dmon::MetricsReport report = dmon::evaluate(inst.graph, out.partition,
                                                    &inst.graph_labels);
        Row row;
        row.param = grid[gi].param_value;
        row.seed = cfg.seed;
        row.method = method;
        row.report = report;
        row.has_threshold = (scenario == 1);
        row.threshold = row.has_threshold ? dmon::detectability_threshold(cfg) : 0.0;
        rows.push_back(row);

        std::cerr << "scenario " << scenario << " point " << (gi + 1) << "/" << grid.size()
                  << " seed " << (si + 1) << "/" << n_seeds << " " << method << ": "
                  << describe(report) << "\n";
      }
    }
  }

  const fs::path out_path = fs::path(global.out_dir) /
                            ("sweep_scenario" + std::to_string(scenario) + "." + global.format);
  std::ofstream out(out_path);
  if (!out) throw dmon::ConfigError("cannot write " + out_path.string());

  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  if (global.format == "csv") {
    out << "scenario,param,seed,method,nmi,f1,modularity,conductance,threshold\n";
    for (const Row& r : rows) {
      out << scenario << ',' << fmt(r.param) << ',' << r.seed << ',' << r.method << ','
          << fmt(r.report.nmi.value_or(0.0)) << ',' << fmt(r.report.f1.value_or(0.0)) << ','
          << fmt(r.report.modularity) << ',' << fmt(r.report.conductance) << ','
          << (r.has_threshold ? fmt(r.threshold) : std::string()) << '\n';
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const Row& r : rows) {
      nlohmann::json j;
      j["scenario"] = scenario;
      j["param"] = r.param;
      j["seed"] = r.seed;
      j["method"] = r.method;
      j["nmi"] = r.report.nmi.value_or(0.0);
      j["f1"] = r.report.f1.value_or(0.0);
      j["modularity"] = r.report.modularity;
      j["conductance"] = r.report.conductance;
      if (r.has_threshold) j["threshold"] = r.threshold;
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
  }
  std::cout << "wrote " << rows.size() << " rows to " << out_path.string() << "\n";
}

void cmd_eval(const GlobalOpts& global, const std::string& input,
              const std::string& partition_path) {
  Dataset ds = load_dataset(input);
  dmon::HardPartition pred = dmon::load_labels(partition_path);
  if (static_cast<std::int64_t>(pred.size()) != ds.graph.n())
    throw dmon::ConfigError("partition has " + std::to_string(pred.size()) +
                            " entries but the graph has " + std::to_string(ds.graph.n()) +
                            " nodes");
  const dmon::HardPartition* truth = ds.truth ? &*ds.truth : nullptr;
  dmon::MetricsReport report = dmon::evaluate(ds.graph, pred, truth);

  fs::create_directories(global.out_dir);
  write_report(fs::path(global.out_dir) / "metrics", global.format, report);
  std::cout << describe(report) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph clustering by differentiable modularity maximization"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--seed", global.seed, "Base RNG seed")->capture_default_str();
  app.add_flag("--deterministic", global.deterministic,
               "Pin single-threaded numerics for bit-reproducible output");
  app.add_option("--out-dir", global.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", global.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "Sample synthetic benchmark instances");
  gen->fallthrough();
  bool gen_defaults = false;
  int gen_scenario = 0;
  int gen_points = 4;
  int gen_seeds = 1;
  std::string gen_config;
  gen->add_flag("--defaults", gen_defaults, "Use the default generator configuration");
  gen->add_option("--scenario", gen_scenario, "Benchmark scenario (1-6)")
      ->check(CLI::Range(1, 6));
  gen->add_option("--points", gen_points, "Grid points per scenario")->capture_default_str();
  gen->add_option("--seeds", gen_seeds, "Instances per grid point")->capture_default_str();
  gen->add_option("--config", gen_config, "Generator config JSON")->check(CLI::ExistingFile);
  gen->callback([&] {
    // fallthrough() routes a post-subcommand --seed up to the app option
    cmd_generate(global, app.count("--seed") > 0, gen_scenario, gen_points, gen_seeds,
                 gen_config);
  });

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster a dataset and report metrics");
  cluster->fallthrough();
  std::string cl_input;
  std::string cl_method = "dmon";
  int cl_k = 16;
  int cl_hidden = 0;  // 0 = auto: 64 for synthetic instances, 512 otherwise
  int cl_epochs = 200;
  double cl_lr = 1e-3;
  double cl_dropout = 0.5;
  int cl_seeds = 10;
  cluster->add_option("--input", cl_input, "Instance or dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  cluster->add_option("--method", cl_method, "dmon, kmeans, or spectral")
      ->check(CLI::IsMember({"dmon", "kmeans", "spectral"}))
      ->capture_default_str();
  cluster->add_option("--k", cl_k, "Number of clusters")->capture_default_str();
  cluster->add_option("--hidden", cl_hidden, "Hidden width (0 = auto)")->capture_default_str();
  cluster->add_option("--epochs", cl_epochs, "Training epochs")->capture_default_str();
  cluster->add_option("--lr", cl_lr, "Learning rate")->capture_default_str();
  cluster->add_option("--dropout", cl_dropout, "Dropout rate")->capture_default_str();
  cluster->add_option("--seeds", cl_seeds, "Number of runs to average")->capture_default_str();
  cluster->callback([&] {
    cmd_cluster(global, cl_input, cl_method, cl_k, cl_hidden, cl_epochs, cl_lr, cl_dropout,
                cl_seeds);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a benchmark scenario over all methods");
  sweep->fallthrough();
  int sw_scenario = 1;
  int sw_points = 4;
  int sw_seeds = 10;
  std::string sw_methods = "dmon,kmeans,spectral";
  int sw_hidden = 64;
  int sw_epochs = 200;
  sweep->add_option("--scenario", sw_scenario, "Benchmark scenario (1-6)")
      ->required()
      ->check(CLI::Range(1, 6));
  sweep->add_option("--points", sw_points, "Grid points")->capture_default_str();
  sweep->add_option("--seeds", sw_seeds, "Instances per grid point")->capture_default_str();
  sweep->add_option("--methods", sw_methods, "Comma-separated method list")
      ->capture_default_str();
  sweep->add_option("--hidden", sw_hidden, "Hidden width")->capture_default_str();
  sweep->add_option("--epochs", sw_epochs, "Training epochs")->capture_default_str();
  sweep->callback([&] {
    cmd_sweep(global, sw_scenario, sw_points, sw_seeds, sw_methods, sw_hidden, sw_epochs);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Score an existing partition file");
  eval->fallthrough();
  std::string ev_input;
  std::string ev_partition;
  eval->add_option("--input", ev_input, "Instance or dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--partition", ev_partition, "Partition file, one cluster id per line")
      ->required()
      ->check(CLI::ExistingFile);
  eval->callback([&] { cmd_eval(global, ev_input, ev_partition); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const dmon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dmon::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
