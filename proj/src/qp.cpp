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

#include "scm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "scm/errors.hpp"
#include "scm/kernels.hpp"

namespace scm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double bound_slack(double lower, double upper) {
  const double range = upper - lower;
  return std::isfinite(range) ? 1e-12 * std::max(1.0, range) : 1e-12;
}

struct Bounds {
  Vector lower;
  Vector upper;
};

Bounds coordinate_bounds(const QuadraticObjective& objective, const ConstraintSet& cset) {
  const auto n = static_cast<Eigen::Index>(objective.linear.size());
  const auto j = static_cast<Eigen::Index>(objective.num_weights());
  Bounds b{Vector(n), Vector(n)};
  b.lower.head(j).setConstant(cset.weight_lower());
  b.upper.head(j).setConstant(cset.weight_upper());
  if (objective.has_intercept) {
    b.lower[j] = cset.intercept_domain->lower;
    b.upper[j] = cset.intercept_domain->upper;
  }
  return b;
}

// Sum over j of clip(v_j - tau, lo, hi).
double clipped_sum(const Vector& v, double tau, double lo, double hi) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::clamp(v[i] - tau, lo, hi);
  return s;
}

// Projection of x = (w, [d]) onto the feasible product set.
Vector project_full(const Vector& x, const QuadraticObjective& objective,
                    const ConstraintSet& cset) {
  const auto j = static_cast<Eigen::Index>(objective.num_weights());
  Vector out(x.size());
  out.head(j) = project_simplex_box(x.head(j), cset).values();
  if (objective.has_intercept) {
    out[j] = std::clamp(x[j], cset.intercept_domain->lower, cset.intercept_domain->upper);
  }
  return out;
}

double estimate_lipschitz(const Matrix& h, std::size_t iterations) {
  const auto n = h.rows();
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  Vector hv(n);
  double lambda = 0.0;
  for (std::size_t k = 0; k < iterations; ++k) {
    kernels::gemv(h, as_span(v), as_span(hv));
    const double norm = std::sqrt(kernels::squared_norm(as_span(hv)));
    if (!(norm > 0.0)) break;
    lambda = kernels::dot(as_span(v), as_span(hv));
    v = hv / norm;
  }
  // Gradient of x'Hx is 2Hx.
  return 2.0 * std::max(lambda, std::numeric_limits<double>::min());
}

// Solves the equality-constrained problem on the free coordinates of x, with
// the others held at their bounds. Returns nullopt when the reduced system is
// singular or the solution leaves the box.
std::optional<Vector> polish(const QuadraticObjective& objective, const Bounds& bounds,
                             const Vector& x) {
  const auto n = x.size();
  const auto j = static_cast<Eigen::Index>(objective.num_weights());
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slack = bound_slack(bounds.lower[i], bounds.upper[i]);
    if (x[i] > bounds.lower[i] + slack && x[i] < bounds.upper[i] - slack) free.push_back(i);
  }
  if (free.empty()) return std::nullopt;

  Vector fixed = x;
  for (Eigen::Index i : free) fixed[i] = 0.0;
  const Vector h_fixed = objective.hessian * fixed;
  double fixed_weight_sum = fixed.head(j).sum();

  const bool any_free_weight = std::any_of(free.begin(), free.end(), [&](Eigen::Index i) { return i < j; });
  const auto nf = static_cast<Eigen::Index>(free.size());
  const Eigen::Index dim = nf + (any_free_weight ? 1 : 0);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index ia = free[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < nf; ++b) {
      kkt(a, b) = 2.0 * objective.hessian(ia, free[static_cast<std::size_t>(b)]);
    }
    rhs[a] = 2.0 * (objective.linear[ia] - h_fixed[ia]);
    if (any_free_weight && ia < j) {
      kkt(a, nf) = 1.0;
      kkt(nf, a) = 1.0;
    }
  }
  if (any_free_weight) rhs[nf] = 1.0 - fixed_weight_sum;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return std::nullopt;

  Vector out = fixed;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index i = free[static_cast<std::size_t>(a)];
    const double slack = bound_slack(bounds.lower[i], bounds.upper[i]);
    if (sol[a] < bounds.lower[i] - slack || sol[a] > bounds.upper[i] + slack) return std::nullopt;
    out[i] = std::clamp(sol[a], bounds.lower[i], bounds.upper[i]);
  }
  return out;
}

}  // namespace

void ConstraintSet::validate(std::size_t num_controls) const {
  const double j = static_cast<double>(num_controls);
  if (num_controls == 0) throw InfeasibleConstraints("weight set needs at least one control");
  if (!std::isfinite(c_lower) || !std::isfinite(c_upper) || c_lower < 0.0 || c_upper < 0.0) {
    throw InfeasibleConstraints("C_L and C_U must be finite and nonnegative");
  }
  if (-j * c_lower > 1.0 || j * c_upper < 1.0) {
    throw InfeasibleConstraints("weight set is empty: need -J*C_L <= 1 <= J*C_U (J=" +
                                std::to_string(num_controls) + ")");
  }
  if (intercept_domain) {
    if (!std::isfinite(intercept_domain->lower) || !std::isfinite(intercept_domain->upper) ||
        intercept_domain->lower > intercept_domain->upper) {
      throw InfeasibleConstraints("intercept domain must be a finite interval with D_L <= D_U");
    }
  }
}

WeightVector WeightVector::uniform(std::size_t j) {
  return WeightVector(Vector::Constant(static_cast<Eigen::Index>(j), 1.0 / static_cast<double>(j)));
}

WeightVector WeightVector::unit(std::size_t j, std::size_t index) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(j));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return WeightVector(std::move(v));
}

bool WeightVector::is_feasible(const ConstraintSet& cset, double tol) const {
  if (values_.size() == 0 || !values_.allFinite()) return false;
  if (std::abs(values_.sum() - 1.0) > tol) return false;
  return values_.minCoeff() >= cset.weight_lower() - tol &&
         values_.maxCoeff() <= cset.weight_upper() + tol;
}

double QuadraticObjective::value(const Vector& x) const {
  Vector hx(x.size());
  kernels::gemv(hessian, as_span(x), as_span(hx));
  return kernels::dot(as_span(x), as_span(hx)) - 2.0 * kernels::dot(as_span(linear), as_span(x)) +
         constant;
}

Vector QuadraticObjective::gradient(const Vector& x) const {
  Vector hx(x.size());
  kernels::gemv(hessian, as_span(x), as_span(hx));
  return 2.0 * (hx - linear);
}

QuadraticObjective least_squares_objective(const PredictorMatrix& pred, bool with_intercept) {
  const auto rows = static_cast<Eigen::Index>(pred.num_rows());
  const auto j = static_cast<Eigen::Index>(pred.num_controls());
  Matrix design(rows, j + (with_intercept ? 1 : 0));
  design.leftCols(j) = pred.controls;
  if (with_intercept) design.col(j).setOnes();
  const double scale = 1.0 / static_cast<double>(pred.t0);
  QuadraticObjective q;
  q.has_intercept = with_intercept;
  q.hessian = scale * (design.transpose() * design);
  q.linear = scale * (design.transpose() * pred.target);
  q.constant = scale * pred.target.squaredNorm();
  return q;
}

double pretreatment_loss(const PredictorMatrix& pred, const WeightVector& w, double intercept) {
  Vector fitted(pred.controls.rows());
  kernels::gemv(pred.controls, as_span(w.values()), as_span(fitted));
  fitted.array() += intercept;
  return kernels::squared_distance(as_span(fitted), as_span(pred.target)) /
         static_cast<double>(pred.t0);
}

WeightVector project_simplex_box(const Vector& v, const ConstraintSet& cset) {
  const auto j = static_cast<std::size_t>(v.size());
  cset.validate(j);
  if (!v.allFinite()) throw DataError("cannot project a non-finite vector");
  const double lo = cset.weight_lower();
  const double hi = cset.weight_upper();

  // s(tau) = sum clip(v - tau) is nonincreasing and piecewise linear with
  // kinks at v_j - hi and v_j - lo; bisect over the sorted kinks, then solve
  // the linear piece exactly.
  std::vector<double> kinks;
  kinks.reserve(2 * j);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    kinks.push_back(v[i] - hi);
    kinks.push_back(v[i] - lo);
  }
  std::sort(kinks.begin(), kinks.end());
  std::size_t left = 0;                 // s(kinks[left]) >= 1
  std::size_t right = kinks.size() - 1;  // s(kinks[right]) <= 1
  while (right - left > 1) {
    const std::size_t mid = left + (right - left) / 2;
    if (clipped_sum(v, kinks[mid], lo, hi) >= 1.0) {
      left = mid;
    } else {
      right = mid;
    }
  }
  const double s_left = clipped_sum(v, kinks[left], lo, hi);
  const double s_right = clipped_sum(v, kinks[right], lo, hi);
  double tau = kinks[left];
  if (s_left > 1.0 && s_right < 1.0) {
    tau = kinks[left] + (s_left - 1.0) * (kinks[right] - kinks[left]) / (s_left - s_right);
  } else if (s_right == 1.0) {
    tau = kinks[right];
  }
  Vector w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) w[i] = std::clamp(v[i] - tau, lo, hi);
  return WeightVector(std::move(w));
}

KktCertificate kkt_certificate(const QuadraticObjective& objective, const ConstraintSet& cset,
                               const Vector& x) {
  const Bounds bounds = coordinate_bounds(objective, cset);
  const Vector g = objective.gradient(x);
  const auto j = static_cast<Eigen::Index>(objective.num_weights());

  // Stationarity g_i + nu = (multiplier of the active bound). Interior and
  // lower-bound coordinates need nu >= -g_i; interior and upper-bound ones
  // need nu <= -g_i.
  double need_above = -kInf;
  double need_below = kInf;
  double interior_sum = 0.0;
  std::size_t interior = 0;
  for (Eigen::Index i = 0; i < j; ++i) {
    const double lo = bounds.lower[i];
    const double hi = bounds.upper[i];
    const double slack = bound_slack(lo, hi);
    const bool at_lower = x[i] <= lo + slack;
    const bool at_upper = x[i] >= hi - slack;
    if (at_lower && at_upper) continue;
    if (!at_upper) need_above = std::max(need_above, -g[i]);
    if (!at_lower) need_below = std::min(need_below, -g[i]);
    if (!at_lower && !at_upper) {
      interior_sum += -g[i];
      ++interior;
    }
  }
  KktCertificate cert;
  if (std::isfinite(need_above) && std::isfinite(need_below)) {
    cert.residual = std::max(0.0, 0.5 * (need_above - need_below));
  }
  if (interior > 0) {
    cert.sum_multiplier = interior_sum / static_cast<double>(interior);
  } else if (std::isfinite(need_above) && std::isfinite(need_below)) {
    cert.sum_multiplier = 0.5 * (need_above + need_below);
  } else if (std::isfinite(need_above)) {
    cert.sum_multiplier = need_above;
  } else if (std::isfinite(need_below)) {
    cert.sum_multiplier = need_below;
  }

  if (objective.has_intercept) {
    const double lo = bounds.lower[j];
    const double hi = bounds.upper[j];
    const double slack = bound_slack(lo, hi);
    const double gd = g[j];
    double violation = std::abs(gd);
    if (x[j] <= lo + slack && x[j] >= hi - slack) {
      violation = 0.0;
    } else if (x[j] <= lo + slack) {
      violation = std::max(0.0, -gd);
    } else if (x[j] >= hi - slack) {
      violation = std::max(0.0, gd);
    }
    cert.residual = std::max(cert.residual, violation);
  }
  return cert;
}

SolveReport solve_quadratic(const QuadraticObjective& objective, const ConstraintSet& cset,
                            const SolverOptions& options) {
  const std::size_t j = objective.num_weights();
  cset.validate(j);
  if (objective.has_intercept && !cset.intercept_domain) {
    throw InfeasibleConstraints("intercept problem needs an intercept domain");
  }
  if (!objective.hessian.allFinite() || !objective.linear.allFinite() ||
      !std::isfinite(objective.constant)) {
    throw DataError("quadratic objective has non-finite entries");
  }
  const Bounds bounds = coordinate_bounds(objective, cset);
  const auto n = static_cast<Eigen::Index>(objective.linear.size());

  Vector start(n);
  start.head(static_cast<Eigen::Index>(j)).setConstant(1.0 / static_cast<double>(j));
  if (objective.has_intercept) start[n - 1] = 0.0;
  Vector x = project_full(start, objective, cset);

  const auto finish = [&](Vector point, std::size_t iterations) {
    SolveReport report;
    const KktCertificate cert = kkt_certificate(objective, cset, point);
    report.kkt_residual = cert.residual;
    report.sum_multiplier = cert.sum_multiplier;
    report.converged = cert.residual <= options.tolerance;
    report.iterations = iterations;
    report.objective = std::max(0.0, objective.value(point));
    report.weights = WeightVector(point.head(static_cast<Eigen::Index>(j)));
    if (objective.has_intercept) report.intercept = point[n - 1];
    return report;
  };

  const bool pinned = (bounds.upper - bounds.lower).maxCoeff() <= 0.0 ||
                      (j == 1 && !objective.has_intercept);
  if (pinned) return finish(x, 0);

  double lipschitz = estimate_lipschitz(objective.hessian, options.power_iterations);
  Vector hx(n);
  kernels::gemv(objective.hessian, as_span(x), as_span(hx));
  Vector y = x;
  Vector hy = hx;
  Vector x_next(n);
  Vector hx_next(n);
  double momentum = 1.0;

  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    const Vector grad = 2.0 * (hy - objective.linear);
    // Backtracking on the quadratic model: (x+ - y)'H(x+ - y) <= (L/2)|x+ - y|^2.
    for (;;) {
      x_next = project_full(y - grad / lipschitz, objective, cset);
      kernels::gemv(objective.hessian, as_span(x_next), as_span(hx_next));
      const Vector step = x_next - y;
      const double curvature = kernels::dot(as_span(step), as_span(Vector(hx_next - hy)));
      const double step_sq = kernels::squared_norm(as_span(step));
      if (curvature <= 0.5 * lipschitz * step_sq * (1.0 + 1e-12) + 1e-300) break;
      lipschitz *= 2.0;
    }

    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next_momentum;
    // Adaptive restart when the momentum direction opposes the gradient step.
    if ((y - x_next).dot(x_next - x) > 0.0) {
      momentum = 1.0;
      y = x_next;
      hy = hx_next;
    } else {
      momentum = next_momentum;
      y = x_next + beta * (x_next - x);
      hy = hx_next + beta * (hx_next - hx);
    }
    x.swap(x_next);
    hx.swap(hx_next);

    if (iter % options.check_every == 0 || iter == options.max_iterations) {
      // Prefer the polished point: it solves the reduced KKT system exactly.
      if (const auto polished = polish(objective, bounds, x)) {
        if (kkt_certificate(objective, cset, *polished).residual <= options.tolerance &&
            objective.value(*polished) <= objective.value(x) + 1e-12 * (1.0 + std::abs(objective.value(x)))) {
          return finish(*polished, iter);
        }
      }
      if (kkt_certificate(objective, cset, x).residual <= options.tolerance) return finish(x, iter);
    }
  }
  return finish(x, options.max_iterations);
}

SolveReport solve_constrained_ls(const PredictorMatrix& pred, const ConstraintSet& cset,
                                 const SolverOptions& options) {
  if (!pred.target.allFinite() || !pred.controls.allFinite()) {
    throw DataError("predictor matrix has non-finite entries");
  }
  ConstraintSet weights_only = cset;
  weights_only.intercept_domain.reset();
  SolveReport report = solve_quadratic(least_squares_objective(pred, false), weights_only, options);
  report.objective = pretreatment_loss(pred, report.weights);
  return report;
}

SolveReport solve_constrained_ls_intercept(const PredictorMatrix& pred, const ConstraintSet& cset,
                                           const SolverOptions& options) {
  if (!cset.intercept_domain) {
    throw InfeasibleConstraints("intercept solve needs an intercept domain");
  }
  if (!pred.target.allFinite() || !pred.controls.allFinite()) {
    throw DataError("predictor matrix has non-finite entries");
  }
  SolveReport report = solve_quadratic(least_squares_objective(pred, true), cset, options);
  report.objective = pretreatment_loss(pred, report.weights, *report.intercept);
  return report;
}

double kkt_residual(const PredictorMatrix& pred, const ConstraintSet& cset, const WeightVector& w,
                    std::optional<double> intercept) {
  const bool with_intercept = intercept.has_value();
  ConstraintSet c = cset;
  if (with_intercept && !c.intercept_domain) {
    c.intercept_domain = Interval{-kInf, kInf};
  }
  const QuadraticObjective q = least_squares_objective(pred, with_intercept);
  Vector x(q.linear.size());
  x.head(static_cast<Eigen::Index>(w.size())) = w.values();
  if (with_intercept) x[x.size() - 1] = *intercept;
  return kkt_certificate(q, c, x).residual;
}

}  // namespace scm
