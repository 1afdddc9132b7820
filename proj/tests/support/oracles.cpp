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

#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace scm::testing {

Matrix random_matrix(TestRng& rng, std::size_t rows, std::size_t cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = normal(rng);
  }
  return m;
}

Vector random_vector(TestRng& rng, std::size_t n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

Vector random_simplex_point(TestRng& rng, std::size_t n) {
  std::exponential_distribution<double> expo(1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = expo(rng) + 1e-3;
  return v / v.sum();
}

std::size_t uniform_index(TestRng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform_real(TestRng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double direct_loss(const PredictorMatrix& pred, const Vector& w, double d) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < pred.controls.rows(); ++t) {
    double fitted = d;
    for (Eigen::Index j = 0; j < pred.controls.cols(); ++j) fitted += pred.controls(t, j) * w[j];
    const double e = pred.target[t] - fitted;
    total += e * e;
  }
  return total / static_cast<double>(pred.t0);
}

GridOptimum grid_search_simplex(const std::function<double(const Vector&)>& f, std::size_t j,
                                double step) {
  const long n = std::lround(1.0 / step);
  GridOptimum best;
  best.value = std::numeric_limits<double>::infinity();
  Vector w(static_cast<Eigen::Index>(j));
  const auto consider = [&] {
    const double v = f(w);
    if (v < best.value) {
      best.value = v;
      best.w = w;
    }
  };
  if (j == 1) {
    w[0] = 1.0;
    consider();
  } else if (j == 2) {
    for (long a = 0; a <= n; ++a) {
      w[0] = static_cast<double>(a) / static_cast<double>(n);
      w[1] = static_cast<double>(n - a) / static_cast<double>(n);
      consider();
    }
  } else if (j == 3) {
    for (long a = 0; a <= n; ++a) {
      for (long b = 0; a + b <= n; ++b) {
        w[0] = static_cast<double>(a) / static_cast<double>(n);
        w[1] = static_cast<double>(b) / static_cast<double>(n);
        w[2] = static_cast<double>(n - a - b) / static_cast<double>(n);
        consider();
      }
    }
  } else {
    throw std::invalid_argument("grid_search_simplex supports J <= 3");
  }
  return best;
}

GridOptimum grid_search_intercept(const PredictorMatrix& pred, double w_step, double d_lower,
                                  double d_upper, double d_step) {
  if (pred.num_controls() != 2) throw std::invalid_argument("grid_search_intercept needs J = 2");
  const long nw = std::lround(1.0 / w_step);
  const long nd = std::lround((d_upper - d_lower) / d_step);
  GridOptimum best;
  best.value = std::numeric_limits<double>::infinity();
  Vector w(2);
  for (long a = 0; a <= nw; ++a) {
    w[0] = static_cast<double>(a) / static_cast<double>(nw);
    w[1] = 1.0 - w[0];
    // The loss is a convex parabola in d; scan outward from the best lattice
    // point only while it improves.
    Vector residual = pred.target - pred.controls * w;
    const double centre = residual.mean();
    long k0 = std::lround((centre - d_lower) / d_step);
    k0 = std::clamp(k0, 0L, nd);
    for (long k = std::max(0L, k0 - 2); k <= std::min(nd, k0 + 2); ++k) {
      const double d = d_lower + d_step * static_cast<double>(k);
      const double v = direct_loss(pred, w, d);
      if (v < best.value) {
        best.value = v;
        best.w = w;
        best.d = d;
      }
    }
  }
  return best;
}

namespace {

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

std::pair<double, double> logistic_profile_grid(const Vector& x, const Vector& y, double lambda,
                                                double b1_lower, double b1_upper, double b1_step) {
  const auto profile_b0 = [&](double b1) {
    // Score in b0 is sum(y - pi), strictly decreasing in b0.
    double lo = -200.0, hi = 200.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double score = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) score += y[i] - sigmoid(mid + b1 * x[i]);
      (score > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const auto objective = [&](double b0, double b1) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double z = b0 + b1 * x[i];
      ll += y[i] * log_sigmoid(z) + (1.0 - y[i]) * log_sigmoid(-z);
    }
    return ll - 0.5 * lambda * b1 * b1;
  };
  double best_value = -std::numeric_limits<double>::infinity();
  std::pair<double, double> best{0.0, 0.0};
  const long n = std::lround((b1_upper - b1_lower) / b1_step);
  for (long k = 0; k <= n; ++k) {
    const double b1 = b1_lower + b1_step * static_cast<double>(k);
    const double b0 = profile_b0(b1);
    const double v = objective(b0, b1);
    if (v > best_value) {
      best_value = v;
      best = {b0, b1};
    }
  }
  return best;
}

Matrix symbolic_error_cov(const Vector& sigma_sq, double b) {
  const Eigen::Index n = sigma_sq.size();
  Matrix t = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i, i) = 1.0 + b * b;
    if (i > 0) t(i, i - 1) = b;
    if (i + 1 < n) t(i, i + 1) = b;
  }
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) s += t(i, k) * t(j, k) * sigma_sq[k];
      out(i, j) = s;
    }
  }
  return out;
}

MonteCarloEstimate gaussian_monte_carlo_loss(const Matrix& mu, const Matrix& sigma, const Vector& w,
                                             double d, std::size_t draws, TestRng& rng) {
  const Eigen::Index n = sigma.rows();
  // Semidefinite-safe factor: Sigma = P' L D L' P.
  const Eigen::MatrixXd dense = sigma;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(dense);
  Eigen::MatrixXd l = ldlt.matrixL();
  Eigen::VectorXd sd = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() * (l * sd.asDiagonal());
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd a(n);
  a[0] = 1.0;
  a.tail(n - 1) = -w;
  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd z(n);
  for (std::size_t r = 0; r < draws; ++r) {
    double loss = 0.0;
    for (Eigen::Index t = 0; t < mu.rows(); ++t) {
      for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
      const Eigen::VectorXd eta = mu.row(t).transpose() + factor * z;
      const double e = a.dot(eta) - d;
      loss += e * e;
    }
    loss /= static_cast<double>(mu.rows());
    sum += loss;
    sum_sq += loss * loss;
  }
  const double m = sum / static_cast<double>(draws);
  const double var = (sum_sq - static_cast<double>(draws) * m * m) / static_cast<double>(draws - 1);
  return {m, std::sqrt(std::max(0.0, var) / static_cast<double>(draws))};
}

PanelData convex_combination_panel(TestRng& rng, const Vector& w, std::size_t t0, std::size_t t1,
                                   std::size_t r) {
  const std::size_t j = static_cast<std::size_t>(w.size());
  Matrix outcomes = random_matrix(rng, j + 1, t0 + t1);
  Matrix covariates = random_matrix(rng, j + 1, r);
  outcomes.row(0).setZero();
  covariates.row(0).setZero();
  for (std::size_t k = 0; k < j; ++k) {
    outcomes.row(0) += w[static_cast<Eigen::Index>(k)] * outcomes.row(static_cast<Eigen::Index>(k + 1));
    covariates.row(0) += w[static_cast<Eigen::Index>(k)] * covariates.row(static_cast<Eigen::Index>(k + 1));
  }
  return PanelData(std::move(outcomes), std::move(covariates), t0, t1);
}

PanelData random_panel(TestRng& rng, std::size_t j, std::size_t t0, std::size_t t1, std::size_t r) {
  return PanelData(random_matrix(rng, j + 1, t0 + t1), random_matrix(rng, j + 1, r), t0, t1);
}

}  // namespace scm::testing
