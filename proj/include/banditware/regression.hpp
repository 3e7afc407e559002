#pragma once

// Per-arm linear runtime models: ridge-stabilised least squares, prediction,
// and the error metrics used by the experiment harness.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "banditware/core.hpp"

namespace banditware {

inline constexpr double kDefaultRidgeLambda = 1e-8;

struct LinearModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t n_observations = 0;

  /// The cold-start model: all coefficients zero.
  static LinearModel zero(std::vector<std::string> names) {
    LinearModel m;
    m.weights.assign(names.size(), 0.0);
    m.feature_names = std::move(names);
    return m;
  }

  /// w^T x + b over raw values; the caller guarantees the feature order.
  double predict_values(std::span<const double> x) const noexcept {
    double acc = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * x[i];
    return acc;
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

inline double predict(const LinearModel& model, const FeatureVector& x) {
  if (x.names != model.feature_names) {
    throw Error(Errc::inconsistent_features, "feature names do not match the model");
  }
  if (x.values.size() != model.weights.size()) {
    throw Error(Errc::dimension_mismatch, "feature vector length differs from model");
  }
  return model.predict_values(x.values);
}

namespace detail {

// Minimises sum (y - w^T x - b)^2 + lambda |w|^2 with an unpenalised bias.
// The bias is eliminated by centring, leaving the normal equations
// (Xc^T Xc + lambda I) w = Xc^T yc; b = mean(y) - w^T mean(x).
inline void solve_centred(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                          std::vector<double>& weights, double& bias) {
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xc.transpose() * yc;

  Eigen::VectorXd w;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (ok) {
    w = ldlt.solve(rhs);
    ok = w.allFinite();
  }
  if (!ok || lambda == 0.0) {
    // Unregularised fits may be singular; fall back to the minimum-norm
    // solution of the same normal equations when LDLT can't certify it.
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
    if (!ok || cod.rank() < gram.cols()) w = cod.solve(rhs);
  }

  weights.assign(w.data(), w.data() + w.size());
  bias = y_mean - x_mean.dot(w);
}

}  // namespace detail

/// Ordinary least squares with a small ridge on the weights (never on the
/// bias). With lambda = 0 and a full-rank design this is exact OLS.
inline LinearModel fit_least_squares(std::span<const Sample> data,
                                     double ridge_lambda = kDefaultRidgeLambda) {
  if (data.empty()) throw Error(Errc::empty_data, "no samples to fit");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw Error(Errc::invalid_config, "ridge_lambda must be a finite non-negative number");
  }
  const auto& names = data.front().features.names;
  const std::size_t m = names.size();
  const auto n = static_cast<Eigen::Index>(data.size());

  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(m));
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = data[static_cast<std::size_t>(r)];
    if (s.features.names != names) {
      throw Error(Errc::inconsistent_features, "sample " + std::to_string(r) +
                                                   " uses a different feature set");
    }
    validate_feature_vector(s.features);
    if (!std::isfinite(s.runtime_seconds)) {
      throw Error(Errc::non_finite_value, "sample " + std::to_string(r) + " runtime");
    }
    for (std::size_t c = 0; c < m; ++c) x(r, static_cast<Eigen::Index>(c)) = s.features.values[c];
    y(r) = s.runtime_seconds;
  }

  LinearModel model;
  model.feature_names = names;
  model.n_observations = data.size();
  detail::solve_centred(x, y, ridge_lambda, model.weights, model.bias);
  return model;
}

struct PredictionPair {
  double predicted = 0.0;
  double actual = 0.0;
};

inline double rmse(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw Error(Errc::empty_data, "rmse of an empty set");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double d = p.predicted - p.actual;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

/// Coefficient of determination, 1 - SS_res / SS_tot.
inline double r_squared(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw Error(Errc::empty_data, "r_squared of an empty set");
  double mean = 0.0;
  for (const auto& p : pairs) mean += p.actual;
  mean /= static_cast<double>(pairs.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (const auto& p : pairs) {
    ss_res += (p.actual - p.predicted) * (p.actual - p.predicted);
    ss_tot += (p.actual - mean) * (p.actual - mean);
  }
  if (ss_tot == 0.0) throw Error(Errc::zero_variance, "all actual values are identical");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace banditware
