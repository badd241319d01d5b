#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmon/nn.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using dmon::DenseMatrix;
using dmon::kSeluAlpha;
using dmon::kSeluLambda;

namespace {

// Central finite difference of sum(weights .* f(x)) wrt x.
template <typename F>
DenseMatrix numeric_grad(const DenseMatrix& x, const DenseMatrix& weights, F f,
                         double h = 1e-6) {
  DenseMatrix g(x.rows(), x.cols());
  DenseMatrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + h;
      const double up = (weights.array() * f(probe).array()).sum();
      probe(i, j) = x(i, j) - h;
      const double dn = (weights.array() * f(probe).array()).sum();
      probe(i, j) = x(i, j);
      g(i, j) = (up - dn) / (2.0 * h);
    }
  }
  return g;
}

double max_rel_err(const DenseMatrix& got, const DenseMatrix& want) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.rows(); ++i) {
    for (Eigen::Index j = 0; j < got.cols(); ++j) {
      const double denom = std::max({std::abs(got(i, j)), std::abs(want(i, j)), 1e-8});
      worst = std::max(worst, std::abs(got(i, j) - want(i, j)) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("selu forward") {
  DenseMatrix x(1, 4);
  x << 0.0, 1.0, -1.0, -40.0;
  DenseMatrix y = dmon::selu(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == doctest::Approx(kSeluLambda).epsilon(1e-12));
  CHECK(y(0, 2) == doctest::Approx(kSeluLambda * kSeluAlpha * (std::exp(-1.0) - 1.0)));
  // deep negative saturates at the analytic limit
  CHECK(y(0, 3) == doctest::Approx(-kSeluLambda * kSeluAlpha).epsilon(1e-12));
}

TEST_CASE("selu backward") {
  SUBCASE("branch values") {
    DenseMatrix x(1, 2);
    x << 1.0, 0.0;
    DenseMatrix up = DenseMatrix::Ones(1, 2);
    DenseMatrix g = dmon::selu_backward(x, up);
    CHECK(g(0, 0) == doctest::Approx(kSeluLambda).epsilon(1e-12));
    CHECK(g(0, 1) == doctest::Approx(kSeluLambda * kSeluAlpha).epsilon(1e-12));
  }

  SUBCASE("matches finite differences") {
    std::mt19937_64 rng(5);
    DenseMatrix x = oracle::random_dense(rng, 4, 3);
    DenseMatrix w = oracle::random_dense(rng, 4, 3);
    DenseMatrix got = dmon::selu_backward(x, w);
    DenseMatrix want = numeric_grad(x, w, [](const DenseMatrix& v) { return dmon::selu(v); });
    CHECK(max_rel_err(got, want) <= 1e-6);
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(dmon::selu_backward(DenseMatrix::Ones(2, 2), DenseMatrix::Ones(2, 3)),
                    dmon::ConfigError);
  }
}

TEST_CASE("softmax rows") {
  SUBCASE("uniform on equal logits") {
    DenseMatrix y = dmon::softmax_rows(DenseMatrix::Zero(2, 3));
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) CHECK(y(i, j) == doctest::Approx(1.0 / 3.0));
  }

  SUBCASE("large logits stay finite") {
    DenseMatrix x(1, 2);
    x << 1000.0, 0.0;
    DenseMatrix y = dmon::softmax_rows(x);
    CHECK(y.allFinite());
    CHECK(y(0, 0) == doctest::Approx(1.0));
    CHECK(y(0, 1) == doctest::Approx(0.0));
  }

  SUBCASE("rows sum to one and stay positive") {
    std::mt19937_64 rng(9);
    DenseMatrix y = dmon::softmax_rows(oracle::random_dense(rng, 10, 5) * 4.0);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      CHECK(y.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y.row(i).minCoeff() > 0.0);
    }
  }

  SUBCASE("backward matches finite differences") {
    std::mt19937_64 rng(13);
    DenseMatrix x = oracle::random_dense(rng, 5, 4);
    DenseMatrix w = oracle::random_dense(rng, 5, 4);
    DenseMatrix y = dmon::softmax_rows(x);
    DenseMatrix got = dmon::softmax_rows_backward(y, w);
    DenseMatrix want =
        numeric_grad(x, w, [](const DenseMatrix& v) { return dmon::softmax_rows(v); });
    CHECK(max_rel_err(got, want) <= 1e-5);
  }
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(21);

  SUBCASE("rate zero is the identity") {
    DenseMatrix x = oracle::random_dense(rng, 3, 3);
    auto r = dmon::dropout(x, 0.0, rng);
    CHECK((r.out - x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.mask.minCoeff() == 1.0);
  }

  SUBCASE("mask entries are 0 or the inverted scale") {
    DenseMatrix x = DenseMatrix::Ones(20, 20);
    auto r = dmon::dropout(x, 0.25, rng);
    for (Eigen::Index i = 0; i < 20; ++i) {
      for (Eigen::Index j = 0; j < 20; ++j) {
        const double m = r.mask(i, j);
        CHECK((m == 0.0 || m == doctest::Approx(1.0 / 0.75).epsilon(1e-12)));
      }
    }
    CHECK((r.out - x.cwiseProduct(r.mask)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("preserves the mean at rate one half") {
    DenseMatrix x = DenseMatrix::Ones(100, 100);
    auto r = dmon::dropout(x, 0.5, rng);
    CHECK(r.out.mean() == doctest::Approx(1.0).epsilon(0.02));
  }

  SUBCASE("rate one rejected") {
    CHECK_THROWS_AS(dmon::dropout(DenseMatrix::Ones(2, 2), 1.0, rng), dmon::ConfigError);
    CHECK_THROWS_AS(dmon::dropout(DenseMatrix::Ones(2, 2), -0.1, rng), dmon::ConfigError);
  }
}

TEST_CASE("glorot init stays inside its limit") {
  std::mt19937_64 rng(33);
  DenseMatrix w = dmon::glorot_uniform(8, 4, rng);
  const double limit = std::sqrt(6.0 / 12.0);
  CHECK(w.maxCoeff() <= limit);
  CHECK(w.minCoeff() >= -limit);
  CHECK(w.maxCoeff() != w.minCoeff());  // actually random
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters alone") {
    DenseMatrix w = DenseMatrix::Ones(2, 2);
    DenseMatrix g = DenseMatrix::Zero(2, 2);
    dmon::AdamState st;
    st.init({&w});
    DenseMatrix before = w;
    dmon::adam_step({&w}, {&g}, st);
    CHECK((w - before).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("first step moves by roughly lr in the gradient direction") {
    DenseMatrix w = DenseMatrix::Zero(1, 2);
    DenseMatrix g(1, 2);
    g << 3.0, -0.5;
    dmon::AdamState st;
    st.lr = 0.01;
    st.init({&w});
    dmon::adam_step({&w}, {&g}, st);
    CHECK(w(0, 0) == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(w(0, 1) == doctest::Approx(0.01).epsilon(1e-4));
  }

  SUBCASE("drives a quadratic bowl toward zero") {
    DenseMatrix w(1, 1);
    w << 1.0;
    dmon::AdamState st;
    st.lr = 0.1;
    st.init({&w});
    // momentum makes |w| oscillate through zero, so require the envelope
    // (peak |w| per 25-step window) to decay instead of per-step descent
    std::vector<double> peaks;
    double window_peak = 0.0;
    for (int step = 0; step < 200; ++step) {
      DenseMatrix g = 2.0 * w;  // d/dw of w^2
      dmon::adam_step({&w}, {&g}, st);
      window_peak = std::max(window_peak, std::abs(w(0, 0)));
      if ((step + 1) % 25 == 0) {
        peaks.push_back(window_peak);
        window_peak = 0.0;
      }
    }
    for (std::size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i] < peaks[i - 1]);
    CHECK(std::abs(w(0, 0)) < 1e-3);
  }

  SUBCASE("non-finite gradient aborts") {
    DenseMatrix w = DenseMatrix::Ones(1, 1);
    DenseMatrix g(1, 1);
    g << std::numeric_limits<double>::quiet_NaN();
    dmon::AdamState st;
    st.init({&w});
    CHECK_THROWS_AS(dmon::adam_step({&w}, {&g}, st), dmon::NumericError);
  }

  SUBCASE("shape mismatch rejected") {
    DenseMatrix w = DenseMatrix::Ones(2, 2);
    DenseMatrix g = DenseMatrix::Ones(2, 3);
    dmon::AdamState st;
    st.init({&w});
    CHECK_THROWS_AS(dmon::adam_step({&w}, {&g}, st), dmon::ConfigError);
  }
}
