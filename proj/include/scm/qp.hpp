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

#pragma once

#include <cstddef>
#include <optional>

#include "scm/linalg.hpp"
#include "scm/panel.hpp"

namespace scm {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const { return lower <= x && x <= upper; }
};

// Weight set {w in [-c_lower, c_upper]^J : sum w = 1}, optionally paired with
// an intercept domain [D_L, D_U].
struct ConstraintSet {
  double c_lower = 0.0;
  double c_upper = 1.0;
  std::optional<Interval> intercept_domain;

  double weight_lower() const { return 0.0 - c_lower; }  // +0.0 when c_lower == 0
  double weight_upper() const { return c_upper; }

  // Throws InfeasibleConstraints when the set is empty for J controls.
  void validate(std::size_t num_controls) const;
};

// Tolerance used for weight-vector feasibility checks throughout.
inline constexpr double kWeightTolerance = 1e-10;

class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(Vector values) : values_(std::move(values)) {}

  static WeightVector uniform(std::size_t j);
  static WeightVector unit(std::size_t j, std::size_t index);

  const Vector& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  bool is_feasible(const ConstraintSet& cset, double tol = kWeightTolerance) const;

 private:
  Vector values_;
};

struct SolveReport {
  WeightVector weights;
  std::optional<double> intercept;
  double objective = 0.0;
  double kkt_residual = 0.0;
  // Multiplier of the sum-to-one constraint at the returned point.
  double sum_multiplier = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// f(x) = x'Hx - 2 g'x + c over x = (w, [d]); the intercept coordinate, when
// present, is last and does not enter the sum constraint.
struct QuadraticObjective {
  Matrix hessian;  // H, symmetric
  Vector linear;   // g
  double constant = 0.0;
  bool has_intercept = false;

  std::size_t num_weights() const {
    return static_cast<std::size_t>(linear.size()) - (has_intercept ? 1 : 0);
  }
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
};

// (1/T0)||X0 - Xc w - d 1||^2 written as a QuadraticObjective.
QuadraticObjective least_squares_objective(const PredictorMatrix& pred, bool with_intercept);

// Pretreatment loss evaluated directly from residuals.
double pretreatment_loss(const PredictorMatrix& pred, const WeightVector& w, double intercept = 0.0);

struct SolverOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 100000;
  std::size_t power_iterations = 50;
  std::size_t check_every = 25;
};

WeightVector project_simplex_box(const Vector& v, const ConstraintSet& cset);

// Minimises `objective` over the weight set (times the intercept domain when
// the objective carries an intercept). Non-convergence is reported through
// SolveReport::converged, not thrown.
SolveReport solve_quadratic(const QuadraticObjective& objective, const ConstraintSet& cset,
                            const SolverOptions& options = {});

SolveReport solve_constrained_ls(const PredictorMatrix& pred, const ConstraintSet& cset,
                                 const SolverOptions& options = {});

// Throws InfeasibleConstraints when cset has no intercept domain.
SolveReport solve_constrained_ls_intercept(const PredictorMatrix& pred, const ConstraintSet& cset,
                                           const SolverOptions& options = {});

struct KktCertificate {
  double residual = 0.0;
  double sum_multiplier = 0.0;
};

// Max-norm violation of stationarity and complementary slackness for the
// box + sum-to-one system at feasible x, minimised over the sum multiplier.
KktCertificate kkt_certificate(const QuadraticObjective& objective, const ConstraintSet& cset,
                               const Vector& x);

double kkt_residual(const PredictorMatrix& pred, const ConstraintSet& cset, const WeightVector& w,
                    std::optional<double> intercept = std::nullopt);

}  // namespace scm
