#pragma once

#include "dmon/common.hpp"
#include "dmon/metrics.hpp"
#include "dmon/sparse_graph.hpp"

#include <cstdint>

namespace dmon {

struct KMeansResult {
  DenseMatrix centers;  // k x s
  HardPartition assignments;
  double inertia = 0.0;  // total within-cluster squared distance
};

// k-means++ seeding followed by Lloyd iterations until the assignment
// reaches a fixpoint or max_iters. Empty clusters are reseeded to the point
// farthest from its current center. Throws ConfigError when k > n.
KMeansResult kmeans(const FeatureMatrix& x, int k, std::uint64_t seed, int max_iters = 100);

// Bx = Ax - d (d^T x) / 2m, exact, without materializing the modularity
// matrix. Throws on length mismatch or an edgeless graph.
Vector modularity_matvec(const SparseGraph& g, const Vector& x);

// Top-k eigenpairs of the modularity matrix via shifted block power
// iteration driven only by modularity_matvec, finished with a Rayleigh-Ritz
// projection. The block carries a few guard vectors beyond k and stops once
// every wanted Ritz pair's residual ||Bv - lambda v|| falls under
// tol * max(1, |lambda|_max). Values sorted descending; each eigenvector
// column sign-fixed so its largest-magnitude entry is positive. Warns on
// stderr and returns the best iterate if the cap is hit.
struct EigenPairs {
  Vector values;        // k, descending
  DenseMatrix vectors;  // n x k
};
EigenPairs top_modularity_eigenpairs(const SparseGraph& g, int k, std::uint64_t seed,
                                     int max_iters = 3000, double tol = 1e-9);

// Spectral modularity maximization: cluster the rows of the top-k
// eigenvector embedding with restarted k-means (best inertia wins), then
// polish with greedy_refine.
HardPartition spectral_modularity(const SparseGraph& g, int k, std::uint64_t seed);

// Single-node moves to the neighboring cluster with the largest positive
// modularity gain, evaluated in O(deg) per node from cached cluster
// volumes. Monotone in Q; stops at a full pass with no move or at the cap.
HardPartition greedy_refine(const SparseGraph& g, const HardPartition& p, int max_passes = 10);

}  // namespace dmon
