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

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "scm/config.hpp"
#include "scm/errors.hpp"
#include "scm/experiments.hpp"
#include "scm/oracle.hpp"

namespace fs = std::filesystem;
using scm::MonteCarloConfig;

namespace {

MonteCarloConfig tiny_config() {
  MonteCarloConfig config;
  config.j_values = {3, 5};
  config.t0_values = {8, 16};
  config.t1 = 4;
  config.replications = 6;
  config.master_seed = 99;
  return config;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "scmopt_test_experiments" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("derive_seed is deterministic, collision-free and avalanching in scans") {
  CHECK(scm::derive_seed(5, 3) == scm::derive_seed(5, 3));
  std::mt19937_64 rng(1);
  std::size_t collisions = 0;
  for (int k = 0; k < 1000000; ++k) {
    const std::uint64_t s = rng();
    collisions += scm::derive_seed(s, 1) == scm::derive_seed(s, 2) ? 1 : 0;
  }
  CHECK(collisions == 0);
  for (int k = 0; k < 1000; ++k) {
    const std::uint64_t s = rng();
    const std::uint64_t s2 = s ^ (1ULL << (k % 64));
    for (std::uint64_t r = 0; r < 50; ++r) {
      if (scm::derive_seed(s, r) == scm::derive_seed(s2, r)) FAIL("seed unchanged by master flip");
    }
  }
  std::set<std::uint64_t> cells;
  for (std::size_t j : {30, 50}) for (std::size_t t0 : {50, 100, 200, 400}) cells.insert(scm::cell_seed(1, j, t0));
  CHECK(cells.size() == 8);
  const auto spec = scm::replication_spec(tiny_config(), 3, 8, 2);
  CHECK(spec.seed == scm::derive_seed(scm::cell_seed(99, 3, 8), 2));
  CHECK(spec.j == 3);
  CHECK(spec.t1 == 4);
}

TEST_CASE("summarise") {
  const auto row = scm::summarise(2, 7, "SCM", "m", {1.0, 2.0, 3.0, 6.0});
  CHECK(row.mean == 3.0);
  CHECK(row.std_error == doctest::Approx(std::sqrt(14.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(row.replications == 4);
  const auto single = scm::summarise(2, 7, "SCM", "m", {4.0});
  CHECK(single.mean == 4.0);
  CHECK(single.std_error == 0.0);
}

TEST_CASE("parallel_for covers every index and propagates exceptions") {
  for (std::size_t threads : {1u, 3u, 0u}) {
    std::vector<int> hits(101, 0);
    scm::parallel_for(101, threads, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  CHECK_THROWS_AS(scm::parallel_for(10, 2, [](std::size_t i) { if (i == 7) throw scm::NumericalError("x"); }),
                  scm::NumericalError);
  std::atomic<int> calls{0};
  scm::parallel_for(0, 4, [&](std::size_t) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("config parsing") {
  const auto config = scm::parse_config(
      "# grid\n j_values = 4, 6 \nt0_values=10\nreplications = 3\nmaster_seed = 18446744073709551615\n"
      "estimators = scm, DSC\nintercept_domain = -5, 5\nthreads = 2\n");
  CHECK(config.j_values == std::vector<std::size_t>{4, 6});
  CHECK(config.t0_values == std::vector<std::size_t>{10});
  CHECK(config.replications == 3);
  CHECK(config.master_seed == 18446744073709551615ULL);
  CHECK(config.estimators == std::vector<scm::Method>{scm::Method::kScm, scm::Method::kDsc});
  REQUIRE(config.intercept_domain);
  CHECK(config.intercept_domain->lower == -5.0);
  CHECK(config.threads == 2);
  const auto again = scm::parse_config(scm::to_config_text(config));
  CHECK(scm::to_config_text(again) == scm::to_config_text(config));

  const MonteCarloConfig defaults = scm::parse_config("");
  CHECK(defaults.j_values == std::vector<std::size_t>{30, 50});
  CHECK(defaults.t0_values == std::vector<std::size_t>{50, 100, 200, 400});
  CHECK(defaults.t1 == 10);
  CHECK(defaults.replications == 200);
  CHECK(defaults.estimators.size() == 7);
  CHECK_FALSE(defaults.intercept_domain);

  CHECK_THROWS_AS(scm::parse_config("colour = red\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("t1 = 3\nt1 = 4\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("t1 = three\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("t1 = 3.5\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("replications = 0\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("j_values = \n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("estimators = SCM, MAGIC\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("ridge_lambda = -1\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("intercept_domain = 3, 1\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("j_values = 3\nc_upper = 0.1\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::parse_config("just words\n"), scm::ConfigError);
  CHECK_THROWS_AS(scm::load_config("/nonexistent/config.txt"), scm::ConfigError);
}

TEST_CASE("convergence with J = 1 is identically zero") {
  MonteCarloConfig config = tiny_config();
  config.j_values = {1};
  const auto result = scm::run_convergence(config);
  REQUIRE(result.rows.size() == 2);
  for (const auto& row : result.rows) {
    CHECK(row.mean == 0.0);
    CHECK(row.std_error == 0.0);
    CHECK(row.metric == scm::kWeightDistanceMetric);
  }
}

TEST_CASE("experiments are deterministic and independent of the thread count") {
  MonteCarloConfig config = tiny_config();
  config.threads = 1;
  const auto a = scm::run_convergence(config);
  const auto b = scm::run_optimality(config);
  config.threads = 3;
  const auto c = scm::run_convergence(config);
  const auto d = scm::run_optimality(config);
  CHECK(scm::result_csv_text(a) == scm::result_csv_text(c));
  CHECK(scm::result_csv_text(b) == scm::result_csv_text(d));
  CHECK(a.samples == c.samples);
  CHECK(b.samples == d.samples);
}

TEST_CASE("optimality cells are complete, ratios respect the infimum and summaries are consistent") {
  const MonteCarloConfig config = tiny_config();
  const auto result = scm::run_optimality(config);
  CHECK(result.kind == "optimality");
  CHECK(result.rows.size() == 2 * 2 * 7);
  REQUIRE(result.samples.size() == result.rows.size());
  for (std::size_t j : config.j_values) {
    for (std::size_t t0 : config.t0_values) {
      for (scm::Method m : scm::all_methods()) CHECK(result.find(j, t0, std::string(scm::method_name(m))) != nullptr);
    }
  }
  CHECK(result.find(4, 8, "SCM") == nullptr);
  for (std::size_t k = 0; k < result.rows.size(); ++k) {
    const auto& s = result.samples[k];
    const auto& row = result.rows[k];
    CHECK(row.replications == config.replications);
    CHECK(std::isfinite(row.std_error));
    CHECK(row.mean >= *std::min_element(s.begin(), s.end()));
    CHECK(row.mean <= *std::max_element(s.begin(), s.end()));
    for (double v : s) CHECK(v >= 1.0 - 1e-8);
  }
}

TEST_CASE("the oracle-optimal weight has risk ratio one") {
  const auto config = tiny_config();
  for (std::size_t r = 0; r < 5; ++r) {
    const auto sim = scm::simulate(scm::replication_spec(config, 5, 8, r));
    const auto opt = scm::optimal_weight(*sim.law, config.weight_set(), false);
    const double floor = scm::pretreatment_fit_floor(*sim.law, config.weight_set(), scm::Horizon::kPost);
    CHECK(scm::risk(opt.weights, *sim.law) / floor == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("estimator subset and explicit intercept domain") {
  MonteCarloConfig config = tiny_config();
  config.estimators = {scm::Method::kDsc, scm::Method::kIpw};
  config.intercept_domain = scm::Interval{-2.0, 2.0};
  const auto result = scm::run_optimality(config);
  CHECK(result.rows.size() == 2 * 2 * 2);
  CHECK(result.rows.front().estimator == "DSC");
  CHECK(result.rows[1].estimator == "IPW");
}

TEST_CASE("report emission and reload") {
  const auto conv = scm::run_convergence(tiny_config());
  const auto opt = scm::run_optimality(tiny_config());
  const fs::path dir = temp_dir("report");
  const scm::ReportFormats all{true, true, true};
  scm::emit_report(conv, dir, all);
  scm::emit_report(opt, dir, all);
  const std::string csv = read_text(dir / "convergence.csv");
  CHECK(csv.rfind("J,T0,estimator,metric,mean,stderr,R\n", 0) == 0);
  CHECK(csv == scm::result_csv_text(conv));

  const auto back = scm::load_result_csv(dir / "optimality.csv");
  CHECK(back.kind == "optimality");
  CHECK(back.rows == opt.rows);
  CHECK(scm::load_result_csv(dir / "convergence.csv").rows == conv.rows);

  CHECK(fs::exists(dir / "convergence.plot.tsv"));
  CHECK(fs::exists(dir / "optimality_J3.plot.tsv"));
  CHECK(fs::exists(dir / "optimality_J5.plot.tsv"));
  const std::string tsv = read_text(dir / "optimality_J3.plot.tsv");
  CHECK(tsv.rfind("T0\tSCM\tDSC\tDID\tEQUAL\tSEL\tPSM\tIPW\n", 0) == 0);
  CHECK(read_text(dir / "convergence.plot.tsv").rfind("T0\tJ=3\tJ=5\n", 0) == 0);

  for (const char* name : {"convergence.svg", "optimality.svg"}) {
    const std::string svg = read_text(dir / name);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find(">T0</text>") != std::string::npos);
  }
  CHECK(read_text(dir / "convergence.svg").find(">weight_distance</text>") != std::string::npos);
  CHECK(read_text(dir / "optimality.svg").find(">risk_ratio</text>") != std::string::npos);

  const fs::path only_csv = temp_dir("only_csv");
  scm::emit_report(conv, only_csv, scm::parse_formats("csv"));
  CHECK(std::distance(fs::directory_iterator(only_csv), fs::directory_iterator()) == 1);
}

TEST_CASE("report errors") {
  CHECK_THROWS_AS(scm::parse_formats("csv,pdf"), scm::ConfigError);
  const auto f = scm::parse_formats("svg,plotdata");
  CHECK_FALSE(f.csv);
  CHECK(f.svg);
  CHECK(f.plotdata);
  const fs::path dir = temp_dir("errors");
  std::ofstream(dir / "blocker") << "x";
  CHECK_THROWS_AS(scm::emit_report(scm::ExperimentResult{"convergence", {}, {}, 0, 0}, dir / "blocker" / "sub",
                                   scm::ReportFormats{}),
                  scm::DataError);
  std::ofstream(dir / "bad.csv") << "J,T0\n1,2\n";
  CHECK_THROWS_AS(scm::load_result_csv(dir / "bad.csv"), scm::DataError);
  std::ofstream(dir / "bad2.csv") << "J,T0,estimator,metric,mean,stderr,R\n1,2,SCM,m,abc,0,3\n";
  CHECK_THROWS_AS(scm::load_result_csv(dir / "bad2.csv"), scm::DataError);
}
