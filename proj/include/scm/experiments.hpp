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
#include <functional>
#include <string>
#include <vector>

#include "scm/config.hpp"
#include "scm/dgp.hpp"

namespace scm {

// Replication seed: the (replication+1)-th output of a SplitMix64 stream
// started at `master`. For a fixed master this is injective in the
// replication index, and for a fixed index injective in the master.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication);

// Seed stream of one (J, T0) grid cell.
std::uint64_t cell_seed(std::uint64_t master, std::size_t j, std::size_t t0);

// Data generating process of replication `replication` in cell (J, T0).
FactorModelSpec replication_spec(const MonteCarloConfig& config, std::size_t j, std::size_t t0,
                                 std::size_t replication);

struct ResultRow {
  std::size_t j = 0;
  std::size_t t0 = 0;
  std::string estimator;
  std::string metric;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replications = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentResult {
  std::string kind;  // "convergence" or "optimality"; names the output files
  std::vector<ResultRow> rows;
  // Per-replication metric values, parallel to `rows`. Not serialised.
  std::vector<std::vector<double>> samples;
  std::size_t solver_failures = 0;
  std::size_t propensity_failures = 0;

  const ResultRow* find(std::size_t j, std::size_t t0, const std::string& estimator) const;
};

inline constexpr const char* kWeightDistanceMetric = "weight_distance";
inline constexpr const char* kRiskRatioMetric = "risk_ratio";

// Mean and standard error (sample sd / sqrt(R)) in replication order.
ResultRow summarise(std::size_t j, std::size_t t0, std::string estimator, std::string metric,
                    const std::vector<double>& samples);

// Runs fn(r) for r in [0, count) on `threads` workers (0 = hardware).
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Average |w_hat - w_opt| per (J, T0). Throws NumericalError when more than
// 1% of replications have a non-converged solve.
ExperimentResult run_convergence(const MonteCarloConfig& config);

// Average risk ratio per (J, T0, estimator): risk at the fit over the
// infimum on H (no-intercept methods) or on H x D (DSC, DID).
ExperimentResult run_optimality(const MonteCarloConfig& config);

// Output formats accepted by emit_report.
struct ReportFormats {
  bool csv = true;
  bool plotdata = false;
  bool svg = false;
};

ReportFormats parse_formats(const std::string& list);

// Writes <kind>.csv, <kind>*.plot.tsv and <kind>.svg as requested.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir,
                 const ReportFormats& formats);

// Reads a result CSV written by emit_report; kind is taken from the stem.
ExperimentResult load_result_csv(const std::filesystem::path& path);

std::string result_csv_text(const ExperimentResult& result);

}  // namespace scm
