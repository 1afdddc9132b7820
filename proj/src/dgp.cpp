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

#include "scm/dgp.hpp"

#include <cmath>
#include <string>

#include "scm/errors.hpp"

namespace scm {

void FactorModelSpec::validate() const {
  if (j < 1) throw ConfigError("factor model needs J >= 1");
  if (t0 < 1 || t1 < 1) throw ConfigError("factor model needs T0 >= 1 and T1 >= 1");
  if (!std::isfinite(b)) throw ConfigError("factor model b must be finite");
  if (sigma_law == SigmaLaw::kFixed) {
    if (static_cast<std::size_t>(fixed_sigmas.size()) != j + 1) {
      throw ConfigError("fixed sigma law needs J+1 = " + std::to_string(j + 1) + " variances");
    }
    if (!(fixed_sigmas.array() > 0.0).all() || !fixed_sigmas.allFinite()) {
      throw ConfigError("fixed variances must be positive and finite");
    }
  }
}

Vector draw_sigmas(const FactorModelSpec& spec, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector sigmas(static_cast<Eigen::Index>(spec.j + 1));
  for (Eigen::Index i = 0; i < sigmas.size(); ++i) sigmas[i] = sigma_sq_from_normal(normal(rng));
  return sigmas;
}

Matrix build_error_cov(const Vector& sigmas, double b) {
  const Eigen::Index n = sigmas.size();
  if (n < 2) throw DataError("error covariance needs at least two units");
  if (!(sigmas.array() > 0.0).all()) throw DataError("variances must be positive");
  const Eigen::Index last = n - 1;  // unit J
  const double a = 1.0 + b * b;
  const double b2 = b * b;
  Matrix cov = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == 0) {
      cov(i, i) = a * a * sigmas[0] + b2 * sigmas[1];
    } else if (i == last) {
      cov(i, i) = a * a * sigmas[last] + b2 * sigmas[last - 1];
    } else {
      cov(i, i) = a * a * sigmas[i] + b2 * (sigmas[i - 1] + sigmas[i + 1]);
    }
    if (i + 1 < n) {
      cov(i, i + 1) = cov(i + 1, i) = b * a * (sigmas[i] + sigmas[i + 1]);
    }
    if (i + 2 < n) {
      cov(i, i + 2) = cov(i + 2, i) = b2 * sigmas[i + 1];
    }
  }
  return cov;
}

SimulatedPanel simulate(const FactorModelSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal;
  const auto units = static_cast<Eigen::Index>(spec.j + 1);
  const auto periods = static_cast<Eigen::Index>(spec.t0 + spec.t1);
  const auto factors = static_cast<Eigen::Index>(FactorModelSpec::kNumFactors);

  // Draw order is part of the reproducibility contract: variances, loadings,
  // factors, then shocks period by period.
  const Vector sigmas = spec.sigma_law == SigmaLaw::kFixed ? spec.fixed_sigmas : draw_sigmas(spec, rng);
  FactorStructure structure{Matrix(factors, units), Matrix(periods, factors)};
  for (Eigen::Index i = 0; i < units; ++i) {
    for (Eigen::Index s = 0; s < factors; ++s) structure.loadings(s, i) = normal(rng);
  }
  for (Eigen::Index t = 0; t < periods; ++t) {
    for (Eigen::Index s = 0; s < factors; ++s) structure.factors(t, s) = normal(rng);
  }

  GaussianOutcomeLaw law;
  law.t0 = spec.t0;
  law.t1 = spec.t1;
  law.mu = structure.factors * structure.loadings;
  law.sigma = build_error_cov(sigmas, spec.b);

  const Vector sd = sigmas.cwiseSqrt();
  const double a = 1.0 + spec.b * spec.b;
  Matrix outcomes(units, periods);
  Vector v(units);
  for (Eigen::Index t = 0; t < periods; ++t) {
    for (Eigen::Index i = 0; i < units; ++i) v[i] = sd[i] * normal(rng);
    for (Eigen::Index i = 0; i < units; ++i) {
      double u = a * v[i];
      if (i + 1 < units) u += spec.b * v[i + 1];
      if (i > 0) u += spec.b * v[i - 1];
      outcomes(i, t) = law.mu(t, i) + u;
    }
  }
  PanelData panel(std::move(outcomes), Matrix(units, 0), spec.t0, spec.t1);
  return SimulatedPanel{std::move(panel), std::move(law), std::move(structure)};
}

FactorModelGenerator::FactorModelGenerator(FactorModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

SimulatedPanel FactorModelGenerator::generate(std::uint64_t seed) const {
  FactorModelSpec s = spec_;
  s.seed = seed;
  return simulate(s);
}

}  // namespace scm
