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
#include <random>

#include "scm/linalg.hpp"
#include "scm/panel.hpp"

namespace scm {

using Rng = std::mt19937_64;

// Conditional law of eta_t = (y_{0,t}, ..., y_{J,t}) given the realised
// factors and loadings: row t of `mu` is its mean over the time grid
// {-T0+1, ..., T1}; `sigma` is its (time-invariant) covariance.
struct GaussianOutcomeLaw {
  Matrix mu;     // (T0 + T1) x (J + 1)
  Matrix sigma;  // (J + 1) x (J + 1)
  std::size_t t0 = 0;
  std::size_t t1 = 0;

  std::size_t num_controls() const { return static_cast<std::size_t>(sigma.rows()) - 1; }
};

// Factor provenance of a simulated panel, for risk decompositions.
struct FactorStructure {
  Matrix loadings;  // F x (J + 1), column i is the loading vector of unit i
  Matrix factors;   // (T0 + T1) x F, row t is lambda_t
};

struct SimulatedPanel {
  PanelData panel;
  std::optional<GaussianOutcomeLaw> law;
  std::optional<FactorStructure> structure;
};

// Plug-in point for data generating processes. A generator without a
// Gaussian law leaves `law` empty; oracle routines then refuse exact risk.
class PanelGenerator {
 public:
  virtual ~PanelGenerator() = default;
  virtual SimulatedPanel generate(std::uint64_t seed) const = 0;
};

enum class SigmaLaw { kHalfChiSqPlusOne, kFixed };

// Two-factor model y_it = g_1i f_1t + g_2i f_2t + u_it with standard normal
// factors and loadings, and u_it = (1+b^2) v_it + b v_{i+1,t} + b v_{i-1,t},
// v_it ~ N(0, sigma_i^2), out-of-range v terms dropped.
struct FactorModelSpec {
  static constexpr std::size_t kNumFactors = 2;

  std::size_t j = 30;
  std::size_t t0 = 50;
  std::size_t t1 = 10;
  double b = 1.0;
  SigmaLaw sigma_law = SigmaLaw::kHalfChiSqPlusOne;
  Vector fixed_sigmas;  // sigma_i^2, length J+1, used with SigmaLaw::kFixed
  std::uint64_t seed = 0;

  void validate() const;
};

// sigma^2 = 0.5 (g^2 + 1) for a standard normal g.
inline double sigma_sq_from_normal(double g) { return 0.5 * (g * g + 1.0); }

// Variances sigma_i^2 for i = 0..J drawn from 0.5 (chi^2(1) + 1).
Vector draw_sigmas(const FactorModelSpec& spec, Rng& rng);

// Pentadiagonal covariance of (u_0, ..., u_J). Throws DataError for a single
// unit or nonpositive variances.
Matrix build_error_cov(const Vector& sigmas, double b);

SimulatedPanel simulate(const FactorModelSpec& spec);

class FactorModelGenerator final : public PanelGenerator {
 public:
  explicit FactorModelGenerator(FactorModelSpec spec);
  SimulatedPanel generate(std::uint64_t seed) const override;
  const FactorModelSpec& spec() const { return spec_; }

 private:
  FactorModelSpec spec_;
};

}  // namespace scm
