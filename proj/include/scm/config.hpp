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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scm/estimators.hpp"
#include "scm/qp.hpp"

namespace scm {

// Monte Carlo grid and estimator settings. Read from flat text with one
// `key = value` per line (lists comma-separated, '#' starts a comment);
// keys are the field names below.
struct MonteCarloConfig {
  std::vector<std::size_t> j_values{30, 50};
  std::vector<std::size_t> t0_values{50, 100, 200, 400};
  std::size_t t1 = 10;
  std::size_t replications = 200;
  std::uint64_t master_seed = 20240601;
  std::vector<Method> estimators = all_methods();
  double c_lower = 0.0;
  double c_upper = 1.0;
  // Unset means [-B, B] with B = 10 max |pretreatment y|, per replication.
  std::optional<Interval> intercept_domain;
  double ridge_lambda = kDefaultRidgeLambda;
  double b = 1.0;
  std::size_t psm_k = 1;
  // Worker threads; 0 picks the hardware concurrency. Results do not depend
  // on it.
  std::size_t threads = 0;

  ConstraintSet weight_set() const { return {c_lower, c_upper, std::nullopt}; }
  void validate() const;
};

MonteCarloConfig parse_config(const std::string& text);
MonteCarloConfig load_config(const std::filesystem::path& path);
std::string to_config_text(const MonteCarloConfig& config);

}  // namespace scm
