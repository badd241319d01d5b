#include "dmon/pipeline.hpp"

#include "dmon/baselines.hpp"

namespace dmon {

std::string to_string(Method method) {
  switch (method) {
    case Method::dmon: return "dmon";
    case Method::kmeans: return "kmeans";
    case Method::spectral: return "spectral";
  }
  throw ConfigError("unknown method");
}

Method method_from_string(const std::string& name) {
  if (name == "dmon") return Method::dmon;
  if (name == "kmeans") return Method::kmeans;
  if (name == "spectral") return Method::spectral;
  throw ConfigError("unknown method '" + name + "' (expected dmon, kmeans, or spectral)");
}

RunOutput run_method(const RunConfig& cfg, const SparseGraph& g, const FeatureMatrix* features) {
  RunOutput out;
  switch (cfg.method) {
    case Method::dmon: {
      if (!features) throw ConfigError("dmon requires node features");
      if (features->rows() != g.n())
        throw ConfigError("feature row count does not match graph size");
      std::mt19937_64 init_rng(cfg.seed);
      DmonModel model =
          DmonModel::init(features->cols(), cfg.hidden, cfg.k, cfg.dropout, init_rng);
      TrainConfig tc;
      tc.epochs = cfg.epochs;
      tc.lr = cfg.lr;
      tc.seed = cfg.seed + 1;  // training stream distinct from init
      TrainResult tr = train(model, g, *features, tc);
      out.history = std::move(tr.history);

      NormalizedAdjacency adj(g);
      std::mt19937_64 eval_rng(0);  // unused in eval mode
      SoftAssignment soft = forward(model, adj, *features, Mode::eval, eval_rng);
      out.partition = harden(soft.c);
      break;
    }
    case Method::kmeans: {
      if (!features) throw ConfigError("kmeans requires node features");
      KMeansResult res = kmeans(*features, cfg.k, cfg.seed);
      out.partition = std::move(res.assignments);
      break;
    }
    case Method::spectral: {
      out.partition = spectral_modularity(g, cfg.k, cfg.seed);
      break;
    }
  }
  return out;
}

MetricsReport evaluate(const SparseGraph& g, const HardPartition& pred,
                       const HardPartition* truth) {
  MetricsReport report;
  report.conductance = mean_conductance(g, pred);
  report.modularity = modularity(g, pred);
  if (truth) {
    report.nmi = nmi(pred, *truth);
    report.f1 = pairwise_f1(pred, *truth);
  }
  return report;
}

}  // namespace dmon
