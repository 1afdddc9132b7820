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

#include "scm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "scm/errors.hpp"
#include "scm/estimators.hpp"
#include "scm/oracle.hpp"

namespace scm {
namespace {

constexpr double kMaxFailureShare = 0.01;

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_failures(std::size_t failures, std::size_t total, const std::string& what) {
  if (static_cast<double>(failures) > kMaxFailureShare * static_cast<double>(total)) {
    throw NumericalError(what + ": " + std::to_string(failures) + " of " + std::to_string(total) +
                         " replications had a non-converged solve (limit 1%)");
  }
}

struct ReplicationOutcome {
  std::vector<double> metrics;  // one per estimator, or a single distance
  bool solver_failed = false;
  bool propensity_failed = false;
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication) {
  return splitmix64_mix(master + 0x9E3779B97F4A7C15ULL * (replication + 1));
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t j, std::size_t t0) {
  return derive_seed(derive_seed(master, j), t0);
}

const ResultRow* ExperimentResult::find(std::size_t j, std::size_t t0,
                                        const std::string& estimator) const {
  for (const auto& row : rows) {
    if (row.j == j && row.t0 == t0 && row.estimator == estimator) return &row;
  }
  return nullptr;
}

ResultRow summarise(std::size_t j, std::size_t t0, std::string estimator, std::string metric,
                    const std::vector<double>& samples) {
  ResultRow row{j, t0, std::move(estimator), std::move(metric), 0.0, 0.0, samples.size()};
  if (samples.empty()) return row;
  double sum = 0.0;
  for (double s : samples) sum += s;
  row.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - row.mean) * (s - row.mean);
    const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    row.std_error = sd / std::sqrt(static_cast<double>(samples.size()));
  }
  return row;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

FactorModelSpec replication_spec(const MonteCarloConfig& config, std::size_t j, std::size_t t0,
                                 std::size_t replication) {
  FactorModelSpec spec;
  spec.j = j;
  spec.t0 = t0;
  spec.t1 = config.t1;
  spec.b = config.b;
  spec.seed = derive_seed(cell_seed(config.master_seed, j, t0), replication);
  return spec;
}

ExperimentResult run_convergence(const MonteCarloConfig& config) {
  config.validate();
  ExperimentResult result;
  result.kind = "convergence";
  const ConstraintSet cset = config.weight_set();
  std::size_t total = 0;
  for (std::size_t j : config.j_values) {
    for (std::size_t t0 : config.t0_values) {
      std::vector<ReplicationOutcome> outcomes(config.replications);
      parallel_for(config.replications, config.threads, [&](std::size_t r) {
        const SimulatedPanel sim = simulate(replication_spec(config, j, t0, r));
        const SolveReport fitted = solve_constrained_ls(build_predictors(sim.panel), cset);
        const SolveReport best = optimal_weight(*sim.law, cset, false, Horizon::kPost);
        outcomes[r].metrics = {(fitted.weights.values() - best.weights.values()).norm()};
        outcomes[r].solver_failed = !fitted.converged || !best.converged;
      });
      std::vector<double> samples;
      for (const auto& o : outcomes) {
        samples.push_back(o.metrics.front());
        result.solver_failures += o.solver_failed ? 1 : 0;
      }
      total += config.replications;
      result.rows.push_back(summarise(j, t0, "SCM", kWeightDistanceMetric, samples));
      result.samples.push_back(std::move(samples));
    }
  }
  check_failures(result.solver_failures, total, "convergence experiment");
  return result;
}

ExperimentResult run_optimality(const MonteCarloConfig& config) {
  config.validate();
  ExperimentResult result;
  result.kind = "optimality";
  const ConstraintSet weights_only = config.weight_set();
  const auto& methods = config.estimators;
  const bool needs_propensity = std::any_of(methods.begin(), methods.end(), [](Method m) {
    return m == Method::kPsm || m == Method::kIpw;
  });
  const bool needs_intercept = std::any_of(methods.begin(), methods.end(), method_has_intercept);
  const bool needs_plain = std::any_of(methods.begin(), methods.end(),
                                       [](Method m) { return !method_has_intercept(m); });

  std::size_t total = 0;
  for (std::size_t j : config.j_values) {
    for (std::size_t t0 : config.t0_values) {
      std::vector<ReplicationOutcome> outcomes(config.replications);
      parallel_for(config.replications, config.threads, [&](std::size_t r) {
        const SimulatedPanel sim = simulate(replication_spec(config, j, t0, r));
        const GaussianOutcomeLaw& law = *sim.law;
        ConstraintSet with_domain = weights_only;
        with_domain.intercept_domain =
            config.intercept_domain ? *config.intercept_domain : default_intercept_domain(sim.panel);

        ReplicationOutcome& out = outcomes[r];
        double floor_plain = 0.0;
        double floor_intercept = 0.0;
        if (needs_plain) {
          const SolveReport best = optimal_weight(law, weights_only, false, Horizon::kPost);
          floor_plain = best.objective;
          out.solver_failed = out.solver_failed || !best.converged;
        }
        if (needs_intercept) {
          const SolveReport best = optimal_weight(law, with_domain, true, Horizon::kPost);
          floor_intercept = best.objective;
          out.solver_failed = out.solver_failed || !best.converged;
        }
        Vector scores;
        if (needs_propensity) {
          const PropensityModel model = fit_propensity(sim.panel, config.ridge_lambda);
          scores = propensity_scores(model, unit_characteristics(sim.panel));
          out.propensity_failed = !model.converged;
        }

        for (Method m : methods) {
          EstimatorFit f;
          switch (m) {
            case Method::kScm: f = fit_scm(sim.panel, weights_only); break;
            case Method::kDsc: f = fit_dsc(sim.panel, with_domain); break;
            case Method::kPsm:
              f = make_fit(m, sim.panel, matching_weights(scores, config.psm_k), 0.0);
              break;
            case Method::kIpw: f = make_fit(m, sim.panel, ipw_weights(scores), 0.0); break;
            default: f = fit(m, sim.panel); break;
          }
          out.solver_failed = out.solver_failed || !f.converged;
          const double r_fit = risk_with_intercept(f.weights, f.intercept, law, Horizon::kPost);
          out.metrics.push_back(r_fit / (method_has_intercept(m) ? floor_intercept : floor_plain));
        }
      });
      total += config.replications;
      for (std::size_t e = 0; e < methods.size(); ++e) {
        std::vector<double> samples;
        samples.reserve(outcomes.size());
        for (const auto& o : outcomes) samples.push_back(o.metrics[e]);
        result.rows.push_back(
            summarise(j, t0, std::string(method_name(methods[e])), kRiskRatioMetric, samples));
        result.samples.push_back(std::move(samples));
      }
      for (const auto& o : outcomes) {
        result.solver_failures += o.solver_failed ? 1 : 0;
        result.propensity_failures += o.propensity_failed ? 1 : 0;
      }
    }
  }
  check_failures(result.solver_failures, total, "optimality experiment");
  return result;
}

}  // namespace scm
