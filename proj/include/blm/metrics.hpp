#pragma once

#include "blm/common.hpp"

#include <algorithm>

namespace blm {

struct ModelParams {
  Vector theta;
  double mu = 0.0;
};

/// ||y - X theta - mu 1||^2 / ||y||^2
inline double train_error(const ModelParams& params, const Matrix& X, const Vector& y) {
  require(X.rows() == y.size() && X.cols() == params.theta.size(), "train_error: dimension mismatch");
  const double denom = y.squaredNorm();
  if (denom == 0.0) throw UndefinedMetric("train_error: labels are identically zero");
  const Vector resid = (y - X * params.theta).array() - params.mu;
  return resid.squaredNorm() / denom;
}

/// Same ratio evaluated on a held-out set.
inline double test_error(const ModelParams& params, const Matrix& X_test, const Vector& y_test) {
  return train_error(params, X_test, y_test);
}

/// Cosine similarity theta^T beta / (||theta|| ||beta||).
inline double correlation(const Vector& theta, const Vector& beta) {
  require(theta.size() == beta.size(), "correlation: dimension mismatch");
  const double nt = theta.norm();
  const double nb = beta.norm();
  if (nt == 0.0 || nb == 0.0) throw UndefinedMetric("correlation: zero vector");
  return std::clamp(theta.dot(beta) / (nt * nb), -1.0, 1.0);
}

}  // namespace blm
