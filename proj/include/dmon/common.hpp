#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dmon {

// Row-major double storage throughout; gradient checks need the precision.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Dense n x s node attribute matrix; rows align with graph node ids.
using FeatureMatrix = DenseMatrix;

// Bad input, bad flags, infeasible configuration. CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values, divergence, undefined metrics. CLI maps this to exit 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Layer-boundary NaN/Inf check, active in debug builds only.
inline void check_finite(const DenseMatrix& x, const char* what) {
#ifndef NDEBUG
  if (!x.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + what);
  }
#else
  (void)x;
  (void)what;
#endif
}

}  // namespace dmon
