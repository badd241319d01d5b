#include "dmon/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <vector>

namespace dmon {

namespace {

// Index of the nearest center; ties go to the lowest index. `gram` holds
// x_i . c_j, center_sq the squared center norms; the ||x_i||^2 term is
// constant per row and drops out of the argmin.
int nearest_center(const Eigen::RowVectorXd& gram_row, const Vector& center_sq) {
  int best = 0;
  double best_score = center_sq[0] - 2.0 * gram_row[0];
  for (int c = 1; c < center_sq.size(); ++c) {
    const double score = center_sq[c] - 2.0 * gram_row[c];
    if (score < best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& x, int k, std::uint64_t seed, int max_iters) {
  const Eigen::Index n = x.rows();
  const Eigen::Index s = x.cols();
  if (k < 1) throw ConfigError("k must be at least 1");
  if (static_cast<Eigen::Index>(k) > n)
    throw ConfigError("k=" + std::to_string(k) + " exceeds point count " + std::to_string(n));
  if (max_iters < 1) throw ConfigError("max_iters must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Vector row_sq = x.rowwise().squaredNorm();

  // k-means++ seeding: next center drawn with probability proportional to
  // squared distance from the nearest chosen center.
  DenseMatrix centers(k, s);
  {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));
    Vector dist2 =
        (row_sq.array() - 2.0 * (x * centers.row(0).transpose()).array() +
         centers.row(0).squaredNorm())
            .max(0.0);
    for (int c = 1; c < k; ++c) {
      const double total = dist2.sum();
      Eigen::Index chosen;
      if (total <= 0.0) {
        chosen = pick(rng);  // all points coincide with a center
      } else {
        const double target = unif(rng) * total;
        double run = 0.0;
        chosen = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          run += dist2[i];
          if (run >= target) {
            chosen = i;
            break;
          }
        }
      }
      centers.row(c) = x.row(chosen);
      Vector cand =
          (row_sq.array() - 2.0 * (x * centers.row(c).transpose()).array() +
           centers.row(c).squaredNorm())
              .max(0.0);
      dist2 = dist2.cwiseMin(cand);
    }
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = (iter == 0);  // first pass always sets assignments

    DenseMatrix gram = x * centers.transpose();  // n x k
    Vector center_sq = centers.rowwise().squaredNorm();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_center(gram.row(i), center_sq);
      if (c != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
      counts[static_cast<std::size_t>(c)]++;
    }

    // Reseed each empty cluster to the point farthest from its center.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = 0;
      double far_d2 = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = assign[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] <= 1) continue;  // do not empty another
        const double d2 = (x.row(i) - centers.row(a)).squaredNorm();
        if (d2 > far_d2) {
          far_d2 = d2;
          farthest = i;
        }
      }
      if (far_d2 < 0.0) continue;  // nothing stealable
      counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(farthest)])]--;
      assign[static_cast<std::size_t>(farthest)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      centers.row(c) = x.row(farthest);
      changed = true;
    }

    if (!changed) break;

    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      centers.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }

  KMeansResult result;
  result.centers = centers;
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.inertia += (x.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
  }
  result.assignments = HardPartition(std::move(assign), k);
  return result;
}

Vector modularity_matvec(const SparseGraph& g, const Vector& x) {
  if (x.size() != g.n()) throw ConfigError("matvec: length mismatch");
  if (g.m() == 0) throw NumericError("modularity matrix undefined on an edgeless graph");
  const double scale = g.degrees().dot(x) / (2.0 * static_cast<double>(g.m()));
  return g.times(x) - scale * g.degrees();
}

namespace {

// Thin orthonormal basis of the column span, with a deterministic sign
// convention (largest-magnitude entry of each column positive).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& w) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(w.rows(), w.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    Eigen::Index idx = 0;
    q.col(j).cwiseAbs().maxCoeff(&idx);
    if (q(idx, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Eigen::MatrixXd apply_matvec(const SparseGraph& g, const Eigen::MatrixXd& v, double shift) {
  Eigen::MatrixXd w(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Vector col = v.col(j);
    w.col(j) = modularity_matvec(g, col);
    if (shift != 0.0) w.col(j) += shift * col;
  }
  return w;
}

}  // namespace

EigenPairs top_modularity_eigenpairs(const SparseGraph& g, int k, std::uint64_t seed,
                                     int max_iters, double tol) {
  const Eigen::Index n = g.n();
  if (k < 1) throw ConfigError("k must be at least 1");
  if (static_cast<Eigen::Index>(k) > n) throw ConfigError("k exceeds node count");
  if (g.m() == 0) throw NumericError("modularity matrix undefined on an edgeless graph");

  // Shift so the wanted (largest algebraic) eigenvalues dominate in
  // magnitude: the spectrum of B lies within 2*max_degree of zero.
  const double shift = 2.0 * g.degrees().maxCoeff();

  // Guard vectors past k: subspace convergence is then paced by the gap to
  // the (p+1)-th eigenvalue instead of consecutive spacings, which cluster
  // tightly once the shift inflates the whole spectrum.
  const int p = static_cast<int>(std::min<Eigen::Index>(n, k + 4));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd v(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) v(i, j) = gauss(rng);
  v = orthonormalize(v);

  bool converged = false;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd w = apply_matvec(g, v, shift);
    Eigen::MatrixXd t = v.transpose() * w;
    t = 0.5 * (t + t.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);

    // Residuals of the k wanted Ritz pairs; the shift cancels, so these are
    // residuals against B itself and bound the eigenvalue error directly.
    Eigen::MatrixXd y = es.eigenvectors().rightCols(k);
    Eigen::VectorXd theta = es.eigenvalues().tail(k);
    Eigen::MatrixXd residual = w * y - (v * y) * theta.asDiagonal();
    const double worst = residual.colwise().norm().maxCoeff();
    const double scale = std::max(1.0, (theta.array() - shift).abs().maxCoeff());

    v = orthonormalize(w);

    if (worst <= tol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::cerr << "warning: block power iteration hit the cap of " << max_iters
              << " iterations; using the best iterate\n";
  }

  // Rayleigh-Ritz rotation of the converged subspace against the unshifted
  // matrix gives the eigenvalue estimates and aligned eigenvectors.
  Eigen::MatrixXd bw = apply_matvec(g, v, 0.0);
  Eigen::MatrixXd t = v.transpose() * bw;
  t = 0.5 * (t + t.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);

  EigenPairs out;
  out.values.resize(k);
  Eigen::MatrixXd rot(p, k);
  for (int j = 0; j < k; ++j) {
    out.values[j] = es.eigenvalues()[p - 1 - j];  // descending
    rot.col(j) = es.eigenvectors().col(p - 1 - j);
  }
  Eigen::MatrixXd vecs = v * rot;
  for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
    Eigen::Index idx = 0;
    vecs.col(j).cwiseAbs().maxCoeff(&idx);
    if (vecs(idx, j) < 0.0) vecs.col(j) = -vecs.col(j);
  }
  out.vectors = vecs;
  return out;
}

HardPartition spectral_modularity(const SparseGraph& g, int k, std::uint64_t seed) {
  EigenPairs pairs = top_modularity_eigenpairs(g, k, seed);

  std::mt19937_64 seeder(seed);
  const int restarts = 10;
  KMeansResult best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KMeansResult res = kmeans(pairs.vectors, k, seeder());
    if (res.inertia < best_inertia) {
      best_inertia = res.inertia;
      best = std::move(res);
    }
  }
  return greedy_refine(g, best.assignments, 10);
}

HardPartition greedy_refine(const SparseGraph& g, const HardPartition& p, int max_passes) {
  if (static_cast<std::int64_t>(p.size()) != g.n())
    throw ConfigError("partition size does not match graph");
  if (g.m() == 0 || max_passes < 1) return p;

  const double m = static_cast<double>(g.m());
  std::vector<int> assign = p.assignments;
  std::vector<double> vol(static_cast<std::size_t>(p.k), 0.0);
  for (std::int64_t u = 0; u < g.n(); ++u) {
    vol[static_cast<std::size_t>(assign[static_cast<std::size_t>(u)])] += g.degree(u);
  }

  std::vector<double> links(static_cast<std::size_t>(p.k), 0.0);
  std::vector<int> touched;

  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::int64_t u = 0; u < g.n(); ++u) {
      const double k_u = g.degree(u);
      if (k_u == 0.0) continue;
      const int a = assign[static_cast<std::size_t>(u)];

      touched.clear();
      for (std::int64_t v : g.neighbors(u)) {
        const int c = assign[static_cast<std::size_t>(v)];
        if (links[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
        links[static_cast<std::size_t>(c)] += 1.0;
      }

      // Gain of moving u from a to b, with volumes taken before the move.
      const double l_ua = links[static_cast<std::size_t>(a)];
      int best_b = a;
      double best_gain = 1e-12;  // strictly positive gains only
      for (int b : touched) {
        if (b == a) continue;
        const double gain =
            (links[static_cast<std::size_t>(b)] - l_ua) / m +
            k_u * (vol[static_cast<std::size_t>(a)] - k_u - vol[static_cast<std::size_t>(b)]) /
                (2.0 * m * m);
        if (gain > best_gain) {
          best_gain = gain;
          best_b = b;
        }
      }
      if (best_b != a) {
        vol[static_cast<std::size_t>(a)] -= k_u;
        vol[static_cast<std::size_t>(best_b)] += k_u;
        assign[static_cast<std::size_t>(u)] = best_b;
        moved = true;
      }
      for (int c : touched) links[static_cast<std::size_t>(c)] = 0.0;
    }
    if (!moved) break;
  }
  return HardPartition(std::move(assign), p.k);
}

}  // namespace dmon
