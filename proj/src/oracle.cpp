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

#include "scm/oracle.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "scm/errors.hpp"
#include "scm/kernels.hpp"

namespace scm {
namespace {

struct RowRange {
  Eigen::Index first;
  Eigen::Index count;
};

RowRange horizon_rows(const GaussianOutcomeLaw& law, Horizon horizon) {
  if (horizon == Horizon::kPre) return {0, static_cast<Eigen::Index>(law.t0)};
  return {static_cast<Eigen::Index>(law.t0), static_cast<Eigen::Index>(law.t1)};
}

void check_law(const GaussianOutcomeLaw& law, std::size_t j) {
  if (law.sigma.rows() != law.sigma.cols() || law.mu.cols() != law.sigma.rows() ||
      static_cast<std::size_t>(law.mu.rows()) != law.t0 + law.t1) {
    throw DataError("Gaussian outcome law has inconsistent dimensions");
  }
  if (law.num_controls() != j) {
    throw DataError("weight vector length does not match the law's number of controls");
  }
}

// (1, -w')
Vector contrast(const WeightVector& w) {
  Vector a(static_cast<Eigen::Index>(w.size()) + 1);
  a[0] = 1.0;
  a.tail(a.size() - 1) = -w.values();
  return a;
}

double variance_term(const Vector& a, const Matrix& sigma) {
  Vector sa(a.size());
  kernels::gemv(sigma, as_span(a), as_span(sa));
  return kernels::dot(as_span(a), as_span(sa));
}

}  // namespace

const GaussianOutcomeLaw& require_law(const SimulatedPanel& sim) {
  if (!sim.law) {
    throw UnsupportedOperation("exact risk needs a Gaussian outcome law; use monte_carlo_risk");
  }
  return *sim.law;
}

QuadraticObjective risk_objective(const GaussianOutcomeLaw& law, Horizon horizon,
                                  bool with_intercept) {
  const auto j = static_cast<Eigen::Index>(law.num_controls());
  check_law(law, static_cast<std::size_t>(j));
  const RowRange rows = horizon_rows(law, horizon);
  const auto mu = law.mu.middleRows(rows.first, rows.count);
  const double inv_t = 1.0 / static_cast<double>(rows.count);
  const auto mu_c = mu.rightCols(j);
  const auto mu_0 = mu.col(0);

  const Eigen::Index n = j + (with_intercept ? 1 : 0);
  QuadraticObjective q;
  q.has_intercept = with_intercept;
  q.hessian.resize(n, n);
  q.linear.resize(n);
  q.hessian.topLeftCorner(j, j) =
      inv_t * (mu_c.transpose() * mu_c) + law.sigma.bottomRightCorner(j, j);
  q.linear.head(j) = inv_t * (mu_c.transpose() * mu_0) + law.sigma.col(0).tail(j);
  q.constant = inv_t * mu_0.squaredNorm() + law.sigma(0, 0);
  if (with_intercept) {
    const Vector mean_c = inv_t * mu_c.colwise().sum().transpose();
    q.hessian.col(j).head(j) = mean_c;
    q.hessian.row(j).head(j) = mean_c.transpose();
    q.hessian(j, j) = 1.0;
    q.linear[j] = inv_t * mu_0.sum();
  }
  return q;
}

double risk(const WeightVector& w, const GaussianOutcomeLaw& law, Horizon horizon) {
  return risk_with_intercept(w, 0.0, law, horizon);
}

double risk_with_intercept(const WeightVector& w, double d, const GaussianOutcomeLaw& law,
                           Horizon horizon) {
  check_law(law, w.size());
  const RowRange rows = horizon_rows(law, horizon);
  const Vector a = contrast(w);
  double mean_part = 0.0;
  for (Eigen::Index t = rows.first; t < rows.first + rows.count; ++t) {
    const double bias = kernels::dot(as_span(a), row_span(law.mu, t)) - d;
    mean_part += bias * bias;
  }
  mean_part /= static_cast<double>(rows.count);
  return mean_part + variance_term(a, law.sigma);
}

SolveReport optimal_weight(const GaussianOutcomeLaw& law, const ConstraintSet& cset,
                           bool with_intercept, Horizon horizon) {
  ConstraintSet c = cset;
  if (!with_intercept) c.intercept_domain.reset();
  SolveReport report = solve_quadratic(risk_objective(law, horizon, with_intercept), c);
  report.objective = risk_with_intercept(report.weights, report.intercept.value_or(0.0), law, horizon);
  return report;
}

double loss_post(const EstimatorFit& fit, const PanelData& truth) {
  const auto t1 = static_cast<Eigen::Index>(truth.t1());
  if (fit.counterfactual.size() != t1) {
    throw DataError("fit and panel disagree on the number of posttreatment periods");
  }
  const Vector y0 = truth.outcomes().row(0).tail(t1).transpose();
  return kernels::squared_distance(as_span(y0), as_span(fit.counterfactual)) /
         static_cast<double>(t1);
}

double pretreatment_fit_floor(const GaussianOutcomeLaw& law, const ConstraintSet& cset,
                              Horizon horizon) {
  return optimal_weight(law, cset, false, horizon).objective;
}

RiskDecomposition risk_decompose(const WeightVector& w, const FactorStructure& structure,
                                 const Matrix& shock_cov, std::size_t t0, std::size_t t1,
                                 Horizon horizon, const Matrix& covariates) {
  const auto units = structure.loadings.cols();
  if (static_cast<std::size_t>(units) != w.size() + 1 || shock_cov.rows() != units ||
      static_cast<std::size_t>(structure.factors.rows()) != t0 + t1) {
    throw UnsupportedOperation("factor provenance does not match the weight vector");
  }
  const Vector a = contrast(w);
  // mu_0 - M w in loading space.
  const Vector gap = structure.loadings * a;
  const Eigen::Index first = horizon == Horizon::kPre ? 0 : static_cast<Eigen::Index>(t0);
  const Eigen::Index count = static_cast<Eigen::Index>(horizon == Horizon::kPre ? t0 : t1);

  RiskDecomposition parts;
  for (Eigen::Index t = first; t < first + count; ++t) {
    const double f = structure.factors.row(t).dot(gap);
    parts.factor_term += f * f;
  }
  parts.factor_term /= static_cast<double>(count);
  parts.idiosyncratic_term = std::max(0.0, variance_term(a, shock_cov));
  if (horizon == Horizon::kPre && covariates.size() > 0) {
    if (covariates.rows() != units) throw DataError("covariate rows do not match the units");
    const Vector z_gap = covariates.transpose() * a;
    parts.covariate_term = z_gap.squaredNorm() / static_cast<double>(t0);
  }
  return parts;
}

double kkt_closed_form_residual(const Matrix& loadings, const Matrix& factor_second_moment,
                                const Vector& treated_loading, double shock_variance,
                                const WeightVector& w, const Vector& rho1, double rho2) {
  const auto j = loadings.cols();
  if (static_cast<std::size_t>(j) != w.size() || rho1.size() != j ||
      factor_second_moment.rows() != loadings.rows() || treated_loading.size() != loadings.rows()) {
    throw DataError("inconsistent dimensions in the closed-form KKT check");
  }
  const Matrix mq = loadings.transpose() * factor_second_moment;
  Matrix system = mq * loadings;
  system.diagonal().array() += shock_variance;
  const Vector rhs = (mq * treated_loading + 0.5 * rho1).array() - 0.5 * rho2;
  return (system * w.values() - rhs).lpNorm<Eigen::Infinity>();
}

DilutionDiagnostic dilution_diagnostic(const Matrix& loadings, const Matrix& factor_second_moment) {
  const double j = static_cast<double>(loadings.cols());
  const Eigen::MatrixXd mm = (loadings * loadings.transpose()) / j;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mm_eig(mm, Eigen::EigenvaluesOnly);
  const Eigen::MatrixXd q = factor_second_moment;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eig(q, Eigen::EigenvaluesOnly);
  DilutionDiagnostic out;
  out.loading_min = mm_eig.eigenvalues().minCoeff();
  out.loading_max = mm_eig.eigenvalues().maxCoeff();
  out.factor_min = q_eig.eigenvalues().minCoeff();
  out.factor_max = q_eig.eigenvalues().maxCoeff();
  return out;
}

MonteCarloRisk monte_carlo_risk(const PanelGenerator& generator, const WeightVector& w, double d,
                                std::uint64_t first_seed, std::size_t draws) {
  if (draws < 2) throw DataError("Monte Carlo risk needs at least two draws");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const SimulatedPanel sim = generator.generate(first_seed + k);
    const double loss = loss_post(make_fit(Method::kScm, sim.panel, w, d), sim.panel);
    const double delta = loss - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (loss - mean);
  }
  const double var = m2 / static_cast<double>(draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(draws))};
}

}  // namespace scm
