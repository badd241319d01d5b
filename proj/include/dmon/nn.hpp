#pragma once

#include "dmon/common.hpp"

#include <random>
#include <vector>

namespace dmon {

// Hand-written dense kernels with matching analytic backward passes. The
// model's computation graph is fixed and shallow, so reverse-mode gradients
// are composed explicitly instead of going through a general autodiff graph.

// SeLU constants from the self-normalizing network definition.
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

DenseMatrix selu(const DenseMatrix& x);

// upstream * selu'(x); at x = 0 the x <= 0 branch value (lambda*alpha) is used.
DenseMatrix selu_backward(const DenseMatrix& x, const DenseMatrix& upstream);

// Rowwise exp-normalization with max subtraction.
DenseMatrix softmax_rows(const DenseMatrix& x);

// Jacobian-vector product through softmax_rows: given y = softmax_rows(x)
// and dL/dy, returns dL/dx.
DenseMatrix softmax_rows_backward(const DenseMatrix& y, const DenseMatrix& upstream);

// Inverted dropout. The returned mask holds the applied per-entry scales
// (0 or 1/(1-rate)); backward is an elementwise product with the mask.
struct DropoutResult {
  DenseMatrix out;
  DenseMatrix mask;
};
DropoutResult dropout(const DenseMatrix& x, double rate, std::mt19937_64& rng);

// Glorot-uniform initialization: U(-l, l) with l = sqrt(6/(fan_in+fan_out)).
DenseMatrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

// Bias-corrected Adam over a fixed list of parameter matrices.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;

  void init(const std::vector<const DenseMatrix*>& params);
};

// One update step; params and grads must align with the state. Throws
// NumericError on non-finite gradients.
void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads, AdamState& state);

}  // namespace dmon
