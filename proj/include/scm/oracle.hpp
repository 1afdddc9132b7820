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
#include <cstdint>
#include <optional>

#include "scm/dgp.hpp"
#include "scm/estimators.hpp"
#include "scm/qp.hpp"

namespace scm {

enum class Horizon { kPre, kPost };

// Risk split into factor approximation error, covariate mismatch and the
// idiosyncratic shock term. Parts are nonnegative and sum to the total.
struct RiskDecomposition {
  double factor_term = 0.0;
  double covariate_term = 0.0;
  double idiosyncratic_term = 0.0;

  double total() const { return factor_term + covariate_term + idiosyncratic_term; }
};

struct DilutionDiagnostic {
  double loading_min = 0.0;  // lambda_min(M M' / J)
  double loading_max = 0.0;  // lambda_max(M M' / J)
  double factor_min = 0.0;   // lambda_min(Q)
  double factor_max = 0.0;   // lambda_max(Q)
};

// Throws UnsupportedOperation when the generator supplied no Gaussian law.
const GaussianOutcomeLaw& require_law(const SimulatedPanel& sim);

// E(eta_0t - w'eta_ct - d)^2 averaged over the horizon, as a quadratic form
// in x = (w, [d]).
QuadraticObjective risk_objective(const GaussianOutcomeLaw& law, Horizon horizon,
                                  bool with_intercept);

// Time average of [(1, -w') mu_t]^2 + tr{(1, -w')'(1, -w') Sigma}.
double risk(const WeightVector& w, const GaussianOutcomeLaw& law, Horizon horizon = Horizon::kPost);

// Same with the synthetic unit shifted by d; equals risk(w) at d = 0.
double risk_with_intercept(const WeightVector& w, double d, const GaussianOutcomeLaw& law,
                           Horizon horizon = Horizon::kPost);

// Minimiser of the horizon risk over the weight set (times the intercept
// domain when requested, which cset must then carry).
SolveReport optimal_weight(const GaussianOutcomeLaw& law, const ConstraintSet& cset,
                           bool with_intercept, Horizon horizon = Horizon::kPost);

// (1/T1) sum_t (y_0t - counterfactual_t)^2 against the panel's own
// posttreatment outcomes, which equal y^N when no effect was injected.
double loss_post(const EstimatorFit& fit, const PanelData& truth);

// Infimum of the horizon risk over the weight set: xi_T0 for kPre.
double pretreatment_fit_floor(const GaussianOutcomeLaw& law, const ConstraintSet& cset,
                              Horizon horizon = Horizon::kPre);

// Decomposition of the horizon risk from factor provenance. `covariates`
// ((J+1) x r) contributes (1/T0)|Z_0 - sum w_j Z_j|^2 on the pretreatment
// horizon only.
RiskDecomposition risk_decompose(const WeightVector& w, const FactorStructure& structure,
                                 const Matrix& shock_cov, std::size_t t0, std::size_t t1,
                                 Horizon horizon = Horizon::kPost,
                                 const Matrix& covariates = Matrix());

// |(M'QM + s2 I) w - (M'Q mu0 + rho1/2 - rho2/2 iota)|_inf, where M is F x J,
// Q is F x F, mu0 has length F and s2 is the shock variance.
double kkt_closed_form_residual(const Matrix& loadings, const Matrix& factor_second_moment,
                                const Vector& treated_loading, double shock_variance,
                                const WeightVector& w, const Vector& rho1, double rho2);

DilutionDiagnostic dilution_diagnostic(const Matrix& loadings, const Matrix& factor_second_moment);

// Fallback for generators without a Gaussian law: average posttreatment
// loss of fixed (w, d) over `draws` panels generated from consecutive seeds.
// Returns {mean, standard error}.
struct MonteCarloRisk {
  double mean = 0.0;
  double std_error = 0.0;
};
MonteCarloRisk monte_carlo_risk(const PanelGenerator& generator, const WeightVector& w, double d,
                                std::uint64_t first_seed, std::size_t draws);

}  // namespace scm
