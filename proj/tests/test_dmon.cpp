#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmon/model.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

using dmon::DenseMatrix;
using dmon::DmonModel;
using dmon::FeatureMatrix;
using dmon::ForwardCache;
using dmon::HardPartition;
using dmon::Mode;
using dmon::NormalizedAdjacency;
using dmon::SparseGraph;

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

// Row-stochastic random C via softmax of gaussian logits.
DenseMatrix random_assignment(std::mt19937_64& rng, Eigen::Index n, int k) {
  return dmon::softmax_rows(oracle::random_dense(rng, n, k));
}

}  // namespace

TEST_CASE("forward pass") {
  std::mt19937_64 rng(2);
  SparseGraph g = oracle::triangle();
  NormalizedAdjacency adj(g);
  FeatureMatrix x = oracle::random_dense(rng, 3, 4);

  SUBCASE("zero weights give the uniform assignment") {
    DmonModel m = DmonModel::init(4, 5, 3, 0.0, rng);
    m.w.setZero();
    m.w_skip.setZero();
    m.w_out.setZero();
    m.b_out.setZero();
    auto c = dmon::forward(m, adj, x, Mode::eval, rng).c;
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) CHECK(c(i, j) == doctest::Approx(1.0 / 3.0));
  }

  SUBCASE("eval mode is deterministic") {
    DmonModel m = DmonModel::init(4, 5, 3, 0.5, rng);
    auto c1 = dmon::forward(m, adj, x, Mode::eval, rng).c;
    auto c2 = dmon::forward(m, adj, x, Mode::eval, rng).c;
    CHECK((c1 - c2).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("rows are stochastic") {
    DmonModel m = DmonModel::init(4, 5, 3, 0.5, rng);
    auto c = dmon::forward(m, adj, x, Mode::train, rng).c;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      CHECK(c.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(c.row(i).minCoeff() >= 0.0);
    }
  }

  SUBCASE("feature width mismatch rejected") {
    DmonModel m = DmonModel::init(6, 5, 3, 0.0, rng);
    CHECK_THROWS_AS(dmon::forward(m, adj, x, Mode::eval, rng), dmon::ConfigError);
  }

  SUBCASE("cluster count below two rejected") {
    CHECK_THROWS_AS(DmonModel::init(4, 5, 1, 0.0, rng), dmon::ConfigError);
  }
}

TEST_CASE("modularity loss") {
  SUBCASE("hard assignments reproduce negative modularity") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 25; ++trial) {
      const std::int64_t n = 6 + trial % 40;
      SparseGraph g = oracle::random_graph(rng, n, 0.2);
      HardPartition p = oracle::random_partition(rng, n, 2 + trial % 4);
      const double soft = dmon::modularity_loss(g, oracle::one_hot(p));
      const double q = dmon::brute_force_modularity(g, p);
      CHECK(std::abs(soft + q) <= 1e-10);
      CHECK(std::abs(-dmon::modularity(g, p) - soft) <= 1e-10);
    }
  }

  SUBCASE("uniform assignment scores zero") {
    SparseGraph g = oracle::two_triangles_bridge();
    DenseMatrix c = DenseMatrix::Constant(6, 4, 0.25);
    CHECK(std::abs(dmon::modularity_loss(g, c)) <= 1e-12);
  }

  SUBCASE("triangle partition of the bridge graph") {
    SparseGraph g = oracle::two_triangles_bridge();
    HardPartition p({0, 0, 0, 1, 1, 1}, 2);
    CHECK(dmon::modularity_loss(g, oracle::one_hot(p)) ==
          doctest::Approx(-5.0 / 14.0).epsilon(1e-12));
  }

  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(43);
    SparseGraph g = oracle::random_graph(rng, 8, 0.4);
    DenseMatrix c = random_assignment(rng, 8, 3);
    DenseMatrix grad;
    dmon::modularity_loss(g, c, &grad);

    const double h = 1e-6;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        DenseMatrix probe = c;
        probe(i, j) = c(i, j) + h;
        const double up = dmon::modularity_loss(g, probe);
        probe(i, j) = c(i, j) - h;
        const double dn = dmon::modularity_loss(g, probe);
        CHECK(rel_err(grad(i, j), (up - dn) / (2.0 * h)) <= 1e-5);
      }
    }
  }

  SUBCASE("edgeless graph rejected") {
    SparseGraph g = SparseGraph::from_edges(3, {});
    CHECK_THROWS_AS(dmon::modularity_loss(g, DenseMatrix::Constant(3, 2, 0.5)),
                    dmon::NumericError);
  }
}

TEST_CASE("collapse regularizer") {
  SUBCASE("endpoints for k in {2, 4, 16}") {
    for (int k : {2, 4, 16}) {
      const Eigen::Index n = 4 * k;
      DenseMatrix balanced = DenseMatrix::Constant(n, k, 1.0 / k);
      CHECK(std::abs(dmon::collapse_regularizer(balanced, k)) <= 1e-12);

      DenseMatrix collapsed = DenseMatrix::Zero(n, k);
      collapsed.col(0).setOnes();
      CHECK(std::abs(dmon::collapse_regularizer(collapsed, k) - (std::sqrt(double(k)) - 1.0)) <=
            1e-12);
    }
  }

  SUBCASE("identity assignment of two nodes is balanced") {
    DenseMatrix c = DenseMatrix::Identity(2, 2);
    CHECK(std::abs(dmon::collapse_regularizer(c, 2)) <= 1e-12);
  }

  SUBCASE("range covers [0, sqrt(k)-1] on random assignments") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 50; ++trial) {
      const int k = 2 + trial % 7;
      DenseMatrix c = random_assignment(rng, 12, k);
      const double v = dmon::collapse_regularizer(c, k);
      CHECK(v >= -1e-12);
      CHECK(v <= std::sqrt(double(k)) - 1.0 + 1e-12);
    }
  }

  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(53);
    DenseMatrix c = random_assignment(rng, 7, 4);
    DenseMatrix grad;
    dmon::collapse_regularizer(c, 4, &grad);

    const double h = 1e-6;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        DenseMatrix probe = c;
        probe(i, j) = c(i, j) + h;
        const double up = dmon::collapse_regularizer(probe, 4);
        probe(i, j) = c(i, j) - h;
        const double dn = dmon::collapse_regularizer(probe, 4);
        CHECK(rel_err(grad(i, j), (up - dn) / (2.0 * h)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("orthogonality diagnostic") {
  SUBCASE("orthonormal columns score zero") {
    DenseMatrix c = DenseMatrix::Identity(4, 4);
    CHECK(dmon::orthogonality_diagnostic(c) == doctest::Approx(0.0));
  }

  SUBCASE("uniform two by two") {
    DenseMatrix c = DenseMatrix::Constant(2, 2, 0.5);
    CHECK(dmon::orthogonality_diagnostic(c) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("finite and non-negative") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 10; ++trial) {
      const double v = dmon::orthogonality_diagnostic(random_assignment(rng, 9, 3));
      CHECK(v >= 0.0);
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("combined loss") {
  SUBCASE("uniform assignment is free") {
    SparseGraph g = oracle::two_triangles_bridge();
    DenseMatrix c = DenseMatrix::Constant(6, 3, 1.0 / 3.0);
    auto breakdown = dmon::loss(g, c, 3);
    CHECK(std::abs(breakdown.modularity_term) <= 1e-12);
    CHECK(std::abs(breakdown.collapse_term) <= 1e-12);
    CHECK(std::abs(breakdown.total) <= 1e-12);
  }

  SUBCASE("balanced hard split of disjoint triangles") {
    SparseGraph g = oracle::two_triangles();
    HardPartition p({0, 0, 0, 1, 1, 1}, 2);
    auto breakdown = dmon::loss(g, oracle::one_hot(p), 2);
    CHECK(breakdown.modularity_term == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(breakdown.collapse_term) <= 1e-12);
    CHECK(breakdown.total == doctest::Approx(-0.5).epsilon(1e-12));
  }

  SUBCASE("total is the sum of its parts") {
    std::mt19937_64 rng(61);
    SparseGraph g = oracle::random_graph(rng, 15, 0.25);
    DenseMatrix c = random_assignment(rng, 15, 4);
    auto breakdown = dmon::loss(g, c, 4);
    CHECK(breakdown.total ==
          doctest::Approx(breakdown.modularity_term + breakdown.collapse_term).epsilon(1e-14));
    CHECK(breakdown.orthogonality == doctest::Approx(dmon::orthogonality_diagnostic(c)));
  }

  SUBCASE("gradient is the sum of component gradients") {
    std::mt19937_64 rng(67);
    SparseGraph g = oracle::random_graph(rng, 8, 0.4);
    DenseMatrix c = random_assignment(rng, 8, 3);
    DenseMatrix grad, grad_mod, grad_col;
    dmon::loss(g, c, 3, &grad);
    dmon::modularity_loss(g, c, &grad_mod);
    dmon::collapse_regularizer(c, 3, &grad_col);
    CHECK((grad - grad_mod - grad_col).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("modularity loss ignores per-row logit shifts") {
  std::mt19937_64 rng(71);
  SparseGraph g = oracle::random_graph(rng, 10, 0.3);
  DenseMatrix logits = oracle::random_dense(rng, 10, 4);
  DenseMatrix shifted = logits;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.row(i).array() += double(i) - 4.0;

  DenseMatrix c1 = dmon::softmax_rows(logits);
  DenseMatrix c2 = dmon::softmax_rows(shifted);
  CHECK((c1 - c2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(dmon::modularity_loss(g, c1) == doctest::Approx(dmon::modularity_loss(g, c2)));
}

TEST_CASE("end-to-end parameter gradients match finite differences") {
  std::mt19937_64 rng(73);
  SparseGraph g = oracle::random_graph(rng, 8, 0.45);
  NormalizedAdjacency adj(g);
  FeatureMatrix x = oracle::random_dense(rng, 8, 5);
  DmonModel model = DmonModel::init(5, 4, 3, 0.0, rng);  // dropout off

  auto loss_at = [&](const DmonModel& m) {
    std::mt19937_64 local(0);
    auto c = dmon::forward(m, adj, x, Mode::eval, local).c;
    return dmon::loss(g, c, m.k).total;
  };

  ForwardCache cache;
  std::mt19937_64 fwd_rng(0);
  dmon::forward(model, adj, x, Mode::eval, fwd_rng, &cache);
  DenseMatrix dc;
  dmon::loss(g, cache.assignment, model.k, &dc);
  dmon::ModelGrads grads = dmon::backward(model, cache, x, dc);

  const double h = 1e-5;
  auto check_param = [&](DenseMatrix DmonModel::* field, const DenseMatrix& analytic) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < (model.*field).rows(); ++i) {
      for (Eigen::Index j = 0; j < (model.*field).cols(); ++j) {
        DmonModel probe = model;
        (probe.*field)(i, j) += h;
        const double up = loss_at(probe);
        (probe.*field)(i, j) -= 2.0 * h;
        const double dn = loss_at(probe);
        worst = std::max(worst, rel_err(analytic(i, j), (up - dn) / (2.0 * h)));
      }
    }
    return worst;
  };

  CHECK(check_param(&DmonModel::w, grads.w) <= 1e-5);
  CHECK(check_param(&DmonModel::w_skip, grads.w_skip) <= 1e-5);
  CHECK(check_param(&DmonModel::w_out, grads.w_out) <= 1e-5);
  CHECK(check_param(&DmonModel::b_out, grads.b_out) <= 1e-5);
}

TEST_CASE("training") {
  SUBCASE("zero epochs change nothing") {
    std::mt19937_64 rng(79);
    SparseGraph g = oracle::two_triangles();
    FeatureMatrix x = oracle::random_dense(rng, 6, 3);
    DmonModel m = DmonModel::init(3, 4, 2, 0.5, rng);
    DmonModel before = m;
    dmon::TrainConfig tc;
    tc.epochs = 0;
    auto result = dmon::train(m, g, x, tc);
    CHECK(result.history.empty());
    CHECK((m.w - before.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.w_out - before.w_out).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("negative epochs rejected") {
    std::mt19937_64 rng(79);
    SparseGraph g = oracle::two_triangles();
    FeatureMatrix x = oracle::random_dense(rng, 6, 3);
    DmonModel m = DmonModel::init(3, 4, 2, 0.5, rng);
    dmon::TrainConfig tc;
    tc.epochs = -1;
    CHECK_THROWS_AS(dmon::train(m, g, x, tc), dmon::ConfigError);
  }

  SUBCASE("history length equals epoch count") {
    std::mt19937_64 rng(83);
    SparseGraph g = oracle::two_triangles_bridge();
    FeatureMatrix x = oracle::random_dense(rng, 6, 3);
    DmonModel m = DmonModel::init(3, 4, 2, 0.5, rng);
    dmon::TrainConfig tc;
    tc.epochs = 17;
    auto result = dmon::train(m, g, x, tc);
    CHECK(result.history.size() == 17);
    for (const auto& h : result.history) {
      CHECK(h.total == doctest::Approx(h.modularity_term + h.collapse_term).epsilon(1e-12));
    }
  }

  SUBCASE("same seed reproduces the same trajectory") {
    std::mt19937_64 rng(89);
    SparseGraph g = oracle::two_triangles_bridge();
    FeatureMatrix x = oracle::random_dense(rng, 6, 3);
    DmonModel m0 = DmonModel::init(3, 4, 2, 0.5, rng);
    DmonModel m1 = m0;
    dmon::TrainConfig tc;
    tc.epochs = 25;
    tc.seed = 5;
    auto r0 = dmon::train(m0, g, x, tc);
    auto r1 = dmon::train(m1, g, x, tc);
    CHECK((m0.w - m1.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m0.w_out - m1.w_out).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r0.history.back().total == r1.history.back().total);
  }

  SUBCASE("recovers two planted ten-cliques") {
    // Features are pure N(0,1) noise: message passing concentrates them into
    // per-clique signatures, so the only cluster signal is structural.
    SparseGraph g = oracle::two_cliques(10);
    int hit = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      FeatureMatrix x = oracle::random_dense(rng, 20, 4);
      DmonModel m = DmonModel::init(4, 16, 2, 0.0, rng);
      dmon::TrainConfig tc;
      tc.epochs = 200;
      tc.lr = 1e-2;
      tc.seed = seed + 100;
      auto result = dmon::train(m, g, x, tc);
      if (result.history.back().modularity_term <= -0.45) ++hit;
    }
    CHECK(hit >= 8);
  }
}

TEST_CASE("harden") {
  SUBCASE("one-hot rows round trip") {
    HardPartition p({2, 0, 1, 2}, 3);
    HardPartition back = dmon::harden(oracle::one_hot(p));
    CHECK(back.assignments == p.assignments);
    CHECK(back.k == 3);
  }

  SUBCASE("ties break toward the lower index") {
    DenseMatrix c(1, 2);
    c << 0.5, 0.5;
    CHECK(dmon::harden(c).assignments[0] == 0);
  }

  SUBCASE("uniform rows all land in cluster zero") {
    DenseMatrix c = DenseMatrix::Constant(5, 4, 0.25);
    for (int id : dmon::harden(c).assignments) CHECK(id == 0);
  }
}

TEST_CASE("checkpoint round trip") {
  std::mt19937_64 rng(97);
  DmonModel m = DmonModel::init(6, 5, 3, 0.3, rng);
  auto path = std::filesystem::temp_directory_path() / "dmon_ckpt.json";
  dmon::save_model(path, m);
  DmonModel back = dmon::load_model(path);
  CHECK(back.hidden == m.hidden);
  CHECK(back.k == m.k);
  CHECK(back.dropout_rate == m.dropout_rate);
  CHECK((back.w - m.w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.w_skip - m.w_skip).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.w_out - m.w_out).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.b_out - m.b_out).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("shape tampering is caught") {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto bad = std::filesystem::temp_directory_path() / "dmon_ckpt_bad.json";
    std::ofstream out(bad);
    out << text.substr(0, text.size() / 2);  // truncated JSON
    out.close();
    CHECK_THROWS_AS(dmon::load_model(bad), dmon::ConfigError);
  }
}

TEST_CASE("loss history file") {
  std::vector<dmon::LossBreakdown> history(3);
  history[1].total = -0.25;
  history[1].modularity_term = -0.3;
  history[1].collapse_term = 0.05;
  history[1].orthogonality = 2.0;
  auto path = std::filesystem::temp_directory_path() / "dmon_history.csv";
  dmon::save_loss_history(path, history);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,total,modularity_term,collapse_term,orthogonality");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 3);
}
