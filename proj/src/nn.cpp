#include "dmon/nn.hpp"

#include <cmath>
#include <string>

namespace dmon {

DenseMatrix selu(const DenseMatrix& x) {
  check_finite(x, "selu input");
  return x.unaryExpr([](double v) {
    return v > 0.0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * (std::exp(v) - 1.0);
  });
}

DenseMatrix selu_backward(const DenseMatrix& x, const DenseMatrix& upstream) {
  if (x.rows() != upstream.rows() || x.cols() != upstream.cols()) {
    throw ConfigError("selu_backward: shape mismatch");
  }
  DenseMatrix deriv = x.unaryExpr([](double v) {
    return v > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(v);
  });
  return upstream.cwiseProduct(deriv);
}

DenseMatrix softmax_rows(const DenseMatrix& x) {
  check_finite(x, "softmax input");
  DenseMatrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

DenseMatrix softmax_rows_backward(const DenseMatrix& y, const DenseMatrix& upstream) {
  if (y.rows() != upstream.rows() || y.cols() != upstream.cols()) {
    throw ConfigError("softmax_rows_backward: shape mismatch");
  }
  // dx_ij = y_ij * (g_ij - sum_l g_il y_il)
  Vector dot = (upstream.array() * y.array()).rowwise().sum();
  DenseMatrix dx = upstream;
  dx.colwise() -= dot;
  return dx.cwiseProduct(y);
}

DropoutResult dropout(const DenseMatrix& x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  DropoutResult r;
  if (rate == 0.0) {
    r.out = x;
    r.mask = DenseMatrix::Ones(x.rows(), x.cols());
    return r;
  }
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  r.mask.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      r.mask(i, j) = unif(rng) < rate ? 0.0 : scale;
    }
  }
  r.out = x.cwiseProduct(r.mask);
  return r;
}

DenseMatrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> unif(-limit, limit);
  DenseMatrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      w(i, j) = unif(rng);
    }
  }
  return w;
}

void AdamState::init(const std::vector<const DenseMatrix*>& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const DenseMatrix* p : params) {
    m.push_back(DenseMatrix::Zero(p->rows(), p->cols()));
    v.push_back(DenseMatrix::Zero(p->rows(), p->cols()));
  }
}

void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ConfigError("adam_step: parameter/gradient/state count mismatch");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const DenseMatrix& g = *grads[i];
    if (!g.allFinite()) {
      throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(i) +
                         " at step " + std::to_string(state.step));
    }
    if (g.rows() != params[i]->rows() || g.cols() != params[i]->cols()) {
      throw ConfigError("adam_step: gradient shape mismatch");
    }
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    const DenseMatrix m_hat = state.m[i] / bc1;
    const DenseMatrix v_hat = state.v[i] / bc2;
    params[i]->array() -= state.lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
  }
}

}  // namespace dmon
