#pragma once

#include "dmon/common.hpp"
#include "dmon/metrics.hpp"
#include "dmon/nn.hpp"
#include "dmon/sparse_graph.hpp"

#include <filesystem>
#include <random>
#include <vector>

namespace dmon {

// One message-passing layer over the normalized adjacency with a trainable
// skip connection from raw features, followed by a dense projection to k
// cluster logits. No self-loops are added; SeLU is the nonlinearity.
struct DmonModel {
  DenseMatrix w;       // s x h
  DenseMatrix w_skip;  // s x h
  DenseMatrix w_out;   // h x k
  DenseMatrix b_out;   // 1 x k
  double dropout_rate = 0.5;
  int hidden = 64;
  int k = 16;

  static DmonModel init(Eigen::Index s, int hidden, int k, double dropout_rate,
                        std::mt19937_64& rng);
};

// Row-stochastic n x k soft cluster membership.
struct SoftAssignment {
  DenseMatrix c;
};

struct LossBreakdown {
  double total = 0.0;
  double modularity_term = 0.0;
  double collapse_term = 0.0;
  double orthogonality = 0.0;  // diagnostic only, never part of total
};

enum class Mode { train, eval };

// Intermediate activations kept for the hand-composed backward pass.
struct ForwardCache {
  DenseMatrix propagated;  // spmm(A_norm, X), n x s
  DenseMatrix pre_act;     // propagated*W + X*W_skip, n x h
  DenseMatrix hidden;      // selu(pre_act)
  DenseMatrix mask;        // dropout scales (ones in eval mode)
  DenseMatrix dropped;     // hidden .* mask
  DenseMatrix assignment;  // softmax(dropped*W_out + b), n x k
};

SoftAssignment forward(const DmonModel& model, const NormalizedAdjacency& adj,
                       const FeatureMatrix& x, Mode mode, std::mt19937_64& rng,
                       ForwardCache* cache = nullptr);

struct ModelGrads {
  DenseMatrix w;
  DenseMatrix w_skip;
  DenseMatrix w_out;
  DenseMatrix b_out;
};

// Reverse pass from dL/dC through softmax, projection, dropout, SeLU and
// both linear paths. The input feature matrix receives no gradient.
ModelGrads backward(const DmonModel& model, const ForwardCache& cache, const FeatureMatrix& x,
                    const DenseMatrix& upstream_dc);

// -(1/2m) [ tr(C^T A C) - ||d^T C||^2 / 2m ], evaluated with one spmm and a
// length-k degree projection; the dense modularity matrix is never formed.
// Optional gradient with respect to C.
double modularity_loss(const SparseGraph& g, const DenseMatrix& c, DenseMatrix* grad = nullptr);

// (sqrt(k)/n) * ||column sums of C||_2 - 1. Zero for perfectly balanced
// soft cluster sizes, sqrt(k)-1 when all mass collapses to one cluster.
double collapse_regularizer(const DenseMatrix& c, int k, DenseMatrix* grad = nullptr);

// ||C^T C - I||_F, logged per epoch as a diagnostic.
double orthogonality_diagnostic(const DenseMatrix& c);

LossBreakdown loss(const SparseGraph& g, const DenseMatrix& c, int k,
                   DenseMatrix* grad = nullptr);

struct TrainConfig {
  int epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<LossBreakdown> history;  // one entry per epoch
};

// Full-graph gradient training with Adam. Deterministic given the seed.
// Throws NumericError with the epoch index if the loss diverges.
TrainResult train(DmonModel& model, const SparseGraph& g, const FeatureMatrix& x,
                  const TrainConfig& config);

// Per-row argmax; ties break toward the lowest cluster index.
HardPartition harden(const DenseMatrix& c);

// JSON checkpoint of named weight arrays with shape headers.
void save_model(const std::filesystem::path& path, const DmonModel& model);
DmonModel load_model(const std::filesystem::path& path);

// CSV: epoch,total,modularity_term,collapse_term,orthogonality
void save_loss_history(const std::filesystem::path& path,
                       const std::vector<LossBreakdown>& history);

}  // namespace dmon
