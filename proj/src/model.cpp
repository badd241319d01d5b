#include "dmon/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dmon {

DmonModel DmonModel::init(Eigen::Index s, int hidden, int k, double dropout_rate,
                          std::mt19937_64& rng) {
  if (s <= 0) throw ConfigError("feature dimension must be positive");
  if (hidden <= 0) throw ConfigError("hidden width must be positive");
  if (k < 2) throw ConfigError("cluster count must be at least 2");
  DmonModel model;
  model.hidden = hidden;
  model.k = k;
  model.dropout_rate = dropout_rate;
  model.w = glorot_uniform(s, hidden, rng);
  model.w_skip = glorot_uniform(s, hidden, rng);
  model.w_out = glorot_uniform(hidden, k, rng);
  model.b_out = DenseMatrix::Zero(1, k);
  return model;
}

SoftAssignment forward(const DmonModel& model, const NormalizedAdjacency& adj,
                       const FeatureMatrix& x, Mode mode, std::mt19937_64& rng,
                       ForwardCache* cache) {
  if (x.cols() != model.w.rows())
    throw ConfigError("feature dimension does not match model input width");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;

  c.propagated = adj.spmm(x);
  c.pre_act = c.propagated * model.w + x * model.w_skip;
  c.hidden = selu(c.pre_act);
  if (mode == Mode::train && model.dropout_rate > 0.0) {
    DropoutResult drop = dropout(c.hidden, model.dropout_rate, rng);
    c.dropped = std::move(drop.out);
    c.mask = std::move(drop.mask);
  } else {
    c.dropped = c.hidden;
    c.mask = DenseMatrix::Ones(c.hidden.rows(), c.hidden.cols());
  }
  DenseMatrix logits = c.dropped * model.w_out;
  logits.rowwise() += model.b_out.row(0);
  c.assignment = softmax_rows(logits);
  check_finite(c.assignment, "soft assignment");
  return SoftAssignment{c.assignment};
}

ModelGrads backward(const DmonModel& model, const ForwardCache& cache, const FeatureMatrix& x,
                    const DenseMatrix& upstream_dc) {
  if (upstream_dc.rows() != cache.assignment.rows() ||
      upstream_dc.cols() != cache.assignment.cols())
    throw ConfigError("upstream gradient shape does not match assignment");

  DenseMatrix d_logits = softmax_rows_backward(cache.assignment, upstream_dc);

  ModelGrads grads;
  grads.w_out = cache.dropped.transpose() * d_logits;
  grads.b_out = d_logits.colwise().sum();

  DenseMatrix d_dropped = d_logits * model.w_out.transpose();
  DenseMatrix d_hidden = d_dropped.cwiseProduct(cache.mask);
  DenseMatrix d_pre = selu_backward(cache.pre_act, d_hidden);

  grads.w = cache.propagated.transpose() * d_pre;
  grads.w_skip = x.transpose() * d_pre;
  return grads;
}

double modularity_loss(const SparseGraph& g, const DenseMatrix& c, DenseMatrix* grad) {
  if (g.m() == 0) throw NumericError("modularity loss undefined on an edgeless graph");
  if (c.rows() != static_cast<Eigen::Index>(g.n()))
    throw ConfigError("assignment row count does not match graph size");

  const double two_m = 2.0 * static_cast<double>(g.m());
  DenseMatrix ac = g.spmm(c);                        // n x k
  Eigen::RowVectorXd dc = g.degrees().transpose() * c;  // 1 x k

  double adjacency_part = (c.cwiseProduct(ac)).sum();   // tr(C^T A C)
  double degree_part = dc.squaredNorm() / two_m;        // ||d^T C||^2 / 2m
  double value = -(adjacency_part - degree_part) / two_m;

  if (grad) {
    // d/dC of tr(C^T A C) is 2AC for symmetric A; the degree part
    // contributes (2/2m) d (d^T C).
    DenseMatrix inner = 2.0 * ac;
    inner.noalias() -= (2.0 / two_m) * (g.degrees() * dc);
    *grad = -inner / two_m;
  }
  return value;
}

double collapse_regularizer(const DenseMatrix& c, int k, DenseMatrix* grad) {
  if (k < 1) throw ConfigError("cluster count must be at least 1");
  if (c.cols() != k) throw ConfigError("assignment column count does not match k");
  const double n = static_cast<double>(c.rows());
  const double scale = std::sqrt(static_cast<double>(k)) / n;

  Eigen::RowVectorXd colsum = c.colwise().sum();
  double norm = colsum.norm();
  double value = scale * norm - 1.0;

  if (grad) {
    grad->resize(c.rows(), c.cols());
    if (norm == 0.0) {
      grad->setZero();  // subgradient at the (unreachable for softmax) origin
    } else {
      Eigen::RowVectorXd row = (scale / norm) * colsum;
      grad->rowwise() = row;
    }
  }
  return value;
}

double orthogonality_diagnostic(const DenseMatrix& c) {
  DenseMatrix gram = c.transpose() * c;
  gram.diagonal().array() -= 1.0;
  return gram.norm();
}

LossBreakdown loss(const SparseGraph& g, const DenseMatrix& c, int k, DenseMatrix* grad) {
  LossBreakdown out;
  if (grad) {
    DenseMatrix grad_mod;
    DenseMatrix grad_col;
    out.modularity_term = modularity_loss(g, c, &grad_mod);
    out.collapse_term = collapse_regularizer(c, k, &grad_col);
    *grad = grad_mod + grad_col;
  } else {
    out.modularity_term = modularity_loss(g, c);
    out.collapse_term = collapse_regularizer(c, k);
  }
  out.orthogonality = orthogonality_diagnostic(c);
  out.total = out.modularity_term + out.collapse_term;
  return out;
}

TrainResult train(DmonModel& model, const SparseGraph& g, const FeatureMatrix& x,
                  const TrainConfig& config) {
  if (config.epochs < 0) throw ConfigError("epoch count must be non-negative");
  std::mt19937_64 rng(config.seed);

  NormalizedAdjacency adj(g);
  std::vector<DenseMatrix*> params = {&model.w, &model.w_skip, &model.w_out, &model.b_out};
  AdamState opt;
  opt.lr = config.lr;
  opt.init({params.begin(), params.end()});

  TrainResult result;
  result.history.reserve(config.epochs);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    ForwardCache cache;
    forward(model, adj, x, Mode::train, rng, &cache);

    DenseMatrix dc;
    LossBreakdown breakdown = loss(g, cache.assignment, model.k, &dc);
    if (!std::isfinite(breakdown.total))
      throw NumericError("loss diverged at epoch " + std::to_string(epoch));
    result.history.push_back(breakdown);

    ModelGrads grads = backward(model, cache, x, dc);
    std::vector<const DenseMatrix*> grad_ptrs = {&grads.w, &grads.w_skip, &grads.w_out,
                                                 &grads.b_out};
    adam_step(params, grad_ptrs, opt);
  }
  return result;
}

HardPartition harden(const DenseMatrix& c) {
  if (c.rows() == 0) throw ConfigError("cannot harden an empty assignment");
  HardPartition part;
  part.k = static_cast<int>(c.cols());
  part.assignments.resize(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    int best = 0;
    double best_val = c(i, 0);
    for (Eigen::Index j = 1; j < c.cols(); ++j) {
      if (c(i, j) > best_val) {
        best_val = c(i, j);
        best = static_cast<int>(j);
      }
    }
    part.assignments[static_cast<std::size_t>(i)] = best;
  }
  return part;
}

namespace {

nlohmann::json matrix_to_json(const DenseMatrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index jcol = 0; jcol < m.cols(); ++jcol) data.push_back(m(i, jcol));
  j["data"] = std::move(data);
  return j;
}

DenseMatrix matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw ConfigError("checkpoint entry '" + name + "' is missing shape or data");
  Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ConfigError("checkpoint entry '" + name + "' has " + std::to_string(data.size()) +
                      " values for a " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " shape");
  DenseMatrix m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jcol = 0; jcol < cols; ++jcol) m(i, jcol) = data[idx++].get<double>();
  return m;
}

}  // namespace

void save_model(const std::filesystem::path& path, const DmonModel& model) {
  nlohmann::json j;
  j["hidden"] = model.hidden;
  j["k"] = model.k;
  j["dropout_rate"] = model.dropout_rate;
  j["w"] = matrix_to_json(model.w);
  j["w_skip"] = matrix_to_json(model.w_skip);
  j["w_out"] = matrix_to_json(model.w_out);
  j["b_out"] = matrix_to_json(model.b_out);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

DmonModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  DmonModel model;
  model.hidden = j.at("hidden").get<int>();
  model.k = j.at("k").get<int>();
  model.dropout_rate = j.at("dropout_rate").get<double>();
  model.w = matrix_from_json(j.at("w"), "w");
  model.w_skip = matrix_from_json(j.at("w_skip"), "w_skip");
  model.w_out = matrix_from_json(j.at("w_out"), "w_out");
  model.b_out = matrix_from_json(j.at("b_out"), "b_out");
  if (model.w.cols() != model.hidden || model.w_skip.cols() != model.hidden ||
      model.w_out.rows() != model.hidden || model.w_out.cols() != model.k ||
      model.b_out.cols() != model.k)
    throw ConfigError("checkpoint " + path.string() + " has inconsistent shapes");
  return model;
}

void save_loss_history(const std::filesystem::path& path,
                       const std::vector<LossBreakdown>& history) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << "epoch,total,modularity_term,collapse_term,orthogonality\n";
  out.precision(17);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const LossBreakdown& h = history[i];
    out << i << ',' << h.total << ',' << h.modularity_term << ',' << h.collapse_term << ','
        << h.orthogonality << '\n';
  }
}

}  // namespace dmon
