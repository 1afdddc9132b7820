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
#include <string>
#include <string_view>
#include <vector>

#include "scm/linalg.hpp"
#include "scm/panel.hpp"
#include "scm/qp.hpp"

namespace scm {

enum class Method { kScm, kDsc, kDid, kEqual, kSel, kPsm, kIpw };

std::string_view method_name(Method method);
// Case-insensitive; throws ConfigError on unknown names.
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();
// DSC and DID carry an intercept.
bool method_has_intercept(Method method);

struct EstimatorFit {
  Method method = Method::kScm;
  WeightVector weights;
  double intercept = 0.0;
  double pre_loss = 0.0;
  Vector counterfactual;  // length T1
  Vector effects;         // observed y_0 minus counterfactual, length T1
  bool converged = true;
  std::size_t iterations = 0;
};

struct PropensityModel {
  Vector coefficients;  // intercept first, then one per predictor row of X_i
  double ridge_lambda = 1e-3;
  bool converged = false;
  std::size_t iterations = 0;
};

inline constexpr double kDefaultRidgeLambda = 1e-3;
inline constexpr double kPropensityClip = 1e-6;

// Knobs shared by every estimator; each method reads only what it needs.
struct EstimatorOptions {
  ConstraintSet cset;
  std::size_t psm_neighbours = 1;
  double ridge_lambda = kDefaultRidgeLambda;
  SolverOptions solver;
};

// [-B, B] with B = 10 * max |y| over all pretreatment outcomes (B >= 1).
Interval default_intercept_domain(const PanelData& panel);

// Weights, intercept and panel -> fit with counterfactual, effects, pre_loss.
EstimatorFit make_fit(Method method, const PanelData& panel, WeightVector weights, double intercept);

EstimatorFit fit_scm(const PanelData& panel, const ConstraintSet& cset,
                     const SolverOptions& solver = {});
EstimatorFit fit_dsc(const PanelData& panel, const ConstraintSet& cset,
                     const SolverOptions& solver = {});
EstimatorFit fit_did(const PanelData& panel);
EstimatorFit fit_equal(const PanelData& panel);
EstimatorFit fit_best_select(const PanelData& panel);

// Ridge-penalised logistic regression of the treatment indicator on X_i,
// maximising sum[y log pi + (1-y) log(1-pi)] - (lambda/2)|beta|^2 with the
// intercept unpenalised.
PropensityModel fit_propensity(const PanelData& panel, double ridge_lambda = kDefaultRidgeLambda);
// Fitted scores pi(X_i) for every unit, unclipped, length J+1.
Vector propensity_scores(const PropensityModel& model, const Matrix& characteristics);

// Weights from scores (row 0 = treated).
WeightVector matching_weights(const Vector& scores, std::size_t k);
WeightVector ipw_weights(const Vector& scores);

EstimatorFit fit_psm(const PanelData& panel, std::size_t k = 1,
                     double ridge_lambda = kDefaultRidgeLambda);
EstimatorFit fit_ipw(const PanelData& panel, double ridge_lambda = kDefaultRidgeLambda);

// Dispatch by method. DSC uses options.cset.intercept_domain, falling back to
// default_intercept_domain(panel) when unset.
EstimatorFit fit(Method method, const PanelData& panel, const EstimatorOptions& options = {});

}  // namespace scm
