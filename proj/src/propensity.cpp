// Copyright 2026 The scmopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <algorithm>

#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "scm/errors.hpp"
#include "scm/estimators.hpp"

namespace scm {
namespace {

constexpr std::size_t kNewtonIterations = 100;
constexpr std::size_t kGradientIterations = 20000;
constexpr double kScoreTolerance = 1e-10;

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double log_likelihood(const Vector& eta, const Vector& labels) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += labels[i] * eta[i] - softplus(eta[i]);
  return ll;
}

// Fixed-step ascent on (b0, beta) directly; used only when the Newton system
// is numerically singular.
PropensityModel gradient_ascent(const Matrix& x, const Vector& labels, double lambda) {
  const auto n = x.rows();
  const auto p = x.cols();
  Matrix design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  const double lipschitz = 0.25 * design.squaredNorm() + lambda;
  const double step = 1.0 / lipschitz;
  Vector coef = Vector::Zero(p + 1);
  PropensityModel model;
  model.ridge_lambda = lambda;
  for (std::size_t it = 1; it <= kGradientIterations; ++it) {
    const Vector eta = design * coef;
    Vector resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = labels[i] - sigmoid(eta[i]);
    Vector grad = design.transpose() * resid;
    grad.tail(p) -= lambda * coef.tail(p);
    coef += step * grad;
    model.iterations = it;
    if (grad.lpNorm<Eigen::Infinity>() <= kScoreTolerance * (1.0 + coef.lpNorm<Eigen::Infinity>())) {
      model.converged = true;
      break;
    }
  }
  model.coefficients = coef;
  return model;
}

}  // namespace

PropensityModel fit_propensity(const PanelData& panel, double ridge_lambda) {
  if (!(ridge_lambda > 0.0) || !std::isfinite(ridge_lambda)) {
    throw DataError("ridge_lambda must be positive and finite");
  }
  const Matrix x = unit_characteristics(panel);
  const auto n = x.rows();
  Vector labels = Vector::Zero(n);
  labels[0] = 1.0;

  // The penalised optimum has beta = X'alpha, so Newton runs over (alpha, b0)
  // in n + 1 dimensions with kernel K = XX' instead of T0 + r + 1.
  const Eigen::MatrixXd kernel = x * x.transpose();
  Vector alpha = Vector::Zero(n);
  double b0 = 0.0;
  const auto objective = [&](const Vector& a, double b) {
    const Vector eta = (kernel * a).array() + b;
    return log_likelihood(eta, labels) - 0.5 * ridge_lambda * a.dot(kernel * a);
  };

  PropensityModel model;
  model.ridge_lambda = ridge_lambda;
  double current = objective(alpha, b0);
  for (std::size_t it = 1; it <= kNewtonIterations; ++it) {
    const Vector eta = (kernel * alpha).array() + b0;
    Vector pi(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pi[i] = sigmoid(eta[i]);
      w[i] = pi[i] * (1.0 - pi[i]);
    }
    const Vector resid = labels - pi;
    const Vector score = resid - ridge_lambda * alpha;
    const double intercept_score = resid.sum();
    model.iterations = it - 1;
    if (std::max(score.lpNorm<Eigen::Infinity>(), std::abs(intercept_score)) <= kScoreTolerance) {
      model.converged = true;
      break;
    }

    Eigen::MatrixXd system(n + 1, n + 1);
    system.topLeftCorner(n, n) = w.asDiagonal() * kernel;
    system.topLeftCorner(n, n).diagonal().array() += ridge_lambda;
    system.topRightCorner(n, 1) = w;
    system.bottomLeftCorner(1, n) = (w.transpose() * kernel);
    system(n, n) = w.sum();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = score;
    rhs[n] = intercept_score;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::VectorXd delta = lu.solve(rhs);
    const double rcond = lu.rcond();
    if (!delta.allFinite() || !(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
      return gradient_ascent(x, labels, ridge_lambda);
    }

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Vector trial_alpha = alpha + step * delta.head(n);
      const double trial_b0 = b0 + step * delta[n];
      const double value = objective(trial_alpha, trial_b0);
      if (value >= current) {
        alpha = trial_alpha;
        b0 = trial_b0;
        improved = value > current || step == 1.0;
        current = value;
        break;
      }
      step *= 0.5;
    }
    model.iterations = it;
    if (!improved) {
      // No ascent possible at machine precision: stationary up to rounding.
      const Vector eta2 = (kernel * alpha).array() + b0;
      Vector r2(n);
      for (Eigen::Index i = 0; i < n; ++i) r2[i] = labels[i] - sigmoid(eta2[i]);
      model.converged = (r2 - ridge_lambda * alpha).lpNorm<Eigen::Infinity>() <= 1e-7 &&
                        std::abs(r2.sum()) <= 1e-7;
      break;
    }
  }
  model.coefficients.resize(x.cols() + 1);
  model.coefficients[0] = b0;
  model.coefficients.tail(x.cols()) = x.transpose() * alpha;
  return model;
}

Vector propensity_scores(const PropensityModel& model, const Matrix& characteristics) {
  const auto p = characteristics.cols();
  if (model.coefficients.size() != p + 1) {
    throw DataError("propensity model does not match the predictor dimension");
  }
  const Vector eta = (characteristics * model.coefficients.tail(p)).array() + model.coefficients[0];
  Vector pi(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) pi[i] = sigmoid(eta[i]);
  return pi;
}

}  // namespace scm
