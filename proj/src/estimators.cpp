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

#include "scm/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "scm/errors.hpp"
#include "scm/kernels.hpp"

namespace scm {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kScm: return "SCM";
    case Method::kDsc: return "DSC";
    case Method::kDid: return "DID";
    case Method::kEqual: return "EQUAL";
    case Method::kSel: return "SEL";
    case Method::kPsm: return "PSM";
    case Method::kIpw: return "IPW";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Method m : all_methods()) {
    if (method_name(m) == upper) return m;
  }
  throw ConfigError("unknown estimator '" + std::string(name) +
                    "' (expected SCM, DSC, DID, EQUAL, SEL, PSM or IPW)");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::kScm,   Method::kDsc, Method::kDid,
                                           Method::kEqual, Method::kSel, Method::kPsm,
                                           Method::kIpw};
  return methods;
}

bool method_has_intercept(Method method) { return method == Method::kDsc || method == Method::kDid; }

Interval default_intercept_domain(const PanelData& panel) {
  const double max_abs = panel.pre_outcomes().cwiseAbs().maxCoeff();
  const double bound = std::max(1.0, 10.0 * max_abs);
  return {-bound, bound};
}

EstimatorFit make_fit(Method method, const PanelData& panel, WeightVector weights,
                      double intercept) {
  if (weights.size() != panel.num_controls()) {
    throw DataError("weight vector length does not match the number of controls");
  }
  EstimatorFit fit;
  fit.method = method;
  fit.intercept = intercept;
  const PredictorMatrix pred = build_predictors(panel);
  fit.pre_loss = pretreatment_loss(pred, weights, intercept);

  const auto t0 = static_cast<Eigen::Index>(panel.t0());
  const auto t1 = static_cast<Eigen::Index>(panel.t1());
  const auto j = static_cast<Eigen::Index>(panel.num_controls());
  // Posttreatment control outcomes as a T1 x J row-major block.
  Matrix post_controls = panel.outcomes().block(1, t0, j, t1).transpose();
  fit.counterfactual.resize(t1);
  kernels::gemv(post_controls, as_span(weights.values()), as_span(fit.counterfactual));
  fit.counterfactual.array() += intercept;
  fit.effects = panel.outcomes().row(0).tail(t1).transpose() - fit.counterfactual;
  fit.weights = std::move(weights);
  return fit;
}

EstimatorFit fit_scm(const PanelData& panel, const ConstraintSet& cset, const SolverOptions& solver) {
  const SolveReport report = solve_constrained_ls(build_predictors(panel), cset, solver);
  EstimatorFit fit = make_fit(Method::kScm, panel, report.weights, 0.0);
  fit.converged = report.converged;
  fit.iterations = report.iterations;
  return fit;
}

EstimatorFit fit_dsc(const PanelData& panel, const ConstraintSet& cset, const SolverOptions& solver) {
  const PredictorMatrix pred = build_predictors(panel);
  const SolveReport report = solve_constrained_ls_intercept(pred, cset, solver);
  EstimatorFit fit = make_fit(Method::kDsc, panel, report.weights, *report.intercept);
  fit.converged = report.converged;
  fit.iterations = report.iterations;
  // With 0 in the domain the no-intercept solution is feasible; keep it when
  // rounding leaves the joint solve marginally worse.
  if (cset.intercept_domain->contains(0.0)) {
    const SolveReport plain = solve_constrained_ls(pred, cset, solver);
    EstimatorFit alt = make_fit(Method::kDsc, panel, plain.weights, 0.0);
    if (alt.pre_loss < fit.pre_loss) {
      alt.converged = plain.converged && report.converged;
      alt.iterations = report.iterations + plain.iterations;
      return alt;
    }
  }
  return fit;
}

EstimatorFit fit_did(const PanelData& panel) {
  const auto t0 = static_cast<Eigen::Index>(panel.t0());
  const auto j = static_cast<Eigen::Index>(panel.num_controls());
  const Matrix& y = panel.outcomes();
  const double treated_mean = y.row(0).head(t0).sum() / static_cast<double>(t0);
  const double control_mean =
      y.block(1, 0, j, t0).sum() / (static_cast<double>(t0) * static_cast<double>(j));
  return make_fit(Method::kDid, panel, WeightVector::uniform(panel.num_controls()),
                  treated_mean - control_mean);
}

EstimatorFit fit_equal(const PanelData& panel) {
  return make_fit(Method::kEqual, panel, WeightVector::uniform(panel.num_controls()), 0.0);
}

EstimatorFit fit_best_select(const PanelData& panel) {
  const Matrix pre = panel.pre_outcomes();
  const auto t0 = pre.cols();
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < panel.num_controls(); ++c) {
    const double loss = kernels::squared_distance(row_span(pre, 0),
                                                  row_span(pre, static_cast<Eigen::Index>(c + 1))) /
                        static_cast<double>(t0);
    if (loss < best_loss) {  // strict: ties keep the lowest index
      best_loss = loss;
      best = c;
    }
  }
  return make_fit(Method::kSel, panel, WeightVector::unit(panel.num_controls(), best), 0.0);
}

WeightVector matching_weights(const Vector& scores, std::size_t k) {
  const auto j = static_cast<std::size_t>(scores.size()) - 1;
  if (k < 1 || k > j) throw DataError("number of matches must lie in [1, J]");
  std::vector<std::size_t> order(j);
  std::iota(order.begin(), order.end(), 0);
  const double target = scores[0];
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(scores[static_cast<Eigen::Index>(a + 1)] - target) <
           std::abs(scores[static_cast<Eigen::Index>(b + 1)] - target);
  });
  Vector w = Vector::Zero(static_cast<Eigen::Index>(j));
  for (std::size_t m = 0; m < k; ++m) w[static_cast<Eigen::Index>(order[m])] = 1.0 / static_cast<double>(k);
  return WeightVector(std::move(w));
}

WeightVector ipw_weights(const Vector& scores) {
  const auto j = scores.size() - 1;
  Vector odds(j);
  for (Eigen::Index c = 0; c < j; ++c) {
    const double p = std::clamp(scores[c + 1], kPropensityClip, 1.0 - kPropensityClip);
    odds[c] = p / (1.0 - p);
  }
  const double total = odds.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("IPW normaliser is degenerate or non-finite");
  }
  return WeightVector(odds / total);
}

EstimatorFit fit_psm(const PanelData& panel, std::size_t k, double ridge_lambda) {
  if (k < 1 || k > panel.num_controls()) throw DataError("number of matches must lie in [1, J]");
  const PropensityModel model = fit_propensity(panel, ridge_lambda);
  const Vector scores = propensity_scores(model, unit_characteristics(panel));
  EstimatorFit fit = make_fit(Method::kPsm, panel, matching_weights(scores, k), 0.0);
  fit.converged = model.converged;
  fit.iterations = model.iterations;
  return fit;
}

EstimatorFit fit_ipw(const PanelData& panel, double ridge_lambda) {
  const PropensityModel model = fit_propensity(panel, ridge_lambda);
  const Vector scores = propensity_scores(model, unit_characteristics(panel));
  EstimatorFit fit = make_fit(Method::kIpw, panel, ipw_weights(scores), 0.0);
  fit.converged = model.converged;
  fit.iterations = model.iterations;
  return fit;
}

EstimatorFit fit(Method method, const PanelData& panel, const EstimatorOptions& options) {
  switch (method) {
    case Method::kScm: return fit_scm(panel, options.cset, options.solver);
    case Method::kDsc: {
      ConstraintSet cset = options.cset;
      if (!cset.intercept_domain) cset.intercept_domain = default_intercept_domain(panel);
      return fit_dsc(panel, cset, options.solver);
    }
    case Method::kDid: return fit_did(panel);
    case Method::kEqual: return fit_equal(panel);
    case Method::kSel: return fit_best_select(panel);
    case Method::kPsm: return fit_psm(panel, options.psm_neighbours, options.ridge_lambda);
    case Method::kIpw: return fit_ipw(panel, options.ridge_lambda);
  }
  throw ConfigError("unhandled estimator");
}

}  // namespace scm
