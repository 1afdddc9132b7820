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

// scmopt: simulate panels, fit estimators, run the Monte Carlo drivers and
// re-render their reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "scm/config.hpp"
#include "scm/dgp.hpp"
#include "scm/errors.hpp"
#include "scm/estimators.hpp"
#include "scm/experiments.hpp"
#include "scm/kernels.hpp"
#include "scm/panel.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw scm::DataError("cannot create output directory " + dir.string());
}

void run_simulate(const fs::path& config_path, const fs::path& out_dir) {
  const scm::MonteCarloConfig config = scm::load_config(config_path);
  ensure_dir(out_dir);
  std::size_t written = 0;
  for (std::size_t j : config.j_values) {
    for (std::size_t t0 : config.t0_values) {
      for (std::size_t r = 0; r < config.replications; ++r) {
        const scm::SimulatedPanel sim = scm::simulate(scm::replication_spec(config, j, t0, r));
        const std::string name = "panel_J" + std::to_string(j) + "_T0" + std::to_string(t0) + "_r" +
                                 std::to_string(r) + ".csv";
        scm::write_panel_csv(sim.panel, out_dir / name);
        ++written;
      }
    }
  }
  std::cout << "wrote " << written << " panels to " << out_dir.string() << "\n";
}

nlohmann::json vector_json(const scm::Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

struct FitArgs {
  fs::path panel;
  std::string method;
  double c_lower = 0.0;
  double c_upper = 1.0;
  double ridge = scm::kDefaultRidgeLambda;
  std::size_t psm_k = 1;
  std::optional<double> d_lower;
  std::optional<double> d_upper;
  fs::path out;
};

void run_fit(const FitArgs& args) {
  const scm::Method method = scm::parse_method(args.method);
  const scm::PanelData panel = scm::load_panel_csv(args.panel);
  scm::EstimatorOptions options;
  options.cset.c_lower = args.c_lower;
  options.cset.c_upper = args.c_upper;
  options.ridge_lambda = args.ridge;
  options.psm_neighbours = args.psm_k;
  if (args.d_lower.has_value() != args.d_upper.has_value()) {
    throw scm::ConfigError("--dlower and --dupper must be given together");
  }
  if (args.d_lower) {
    if (!(*args.d_lower <= *args.d_upper)) throw scm::ConfigError("--dlower must not exceed --dupper");
    options.cset.intercept_domain = scm::Interval{*args.d_lower, *args.d_upper};
  }
  const scm::EstimatorFit fit = scm::fit(method, panel, options);

  nlohmann::json doc;
  doc["method"] = std::string(scm::method_name(method));
  const auto labels = panel.effective_labels();
  doc["treated"] = labels.front();
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t j = 0; j < fit.weights.size(); ++j) weights[labels[j + 1]] = fit.weights[j];
  doc["weights"] = weights;
  doc["intercept"] = fit.intercept;
  doc["pre_loss"] = fit.pre_loss;
  doc["counterfactual"] = vector_json(fit.counterfactual);
  doc["effects"] = vector_json(fit.effects);
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;

  const std::string text = doc.dump(2) + "\n";
  if (args.out.empty() || args.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw scm::DataError("cannot write " + args.out.string());
  out << text;
}

void run_experiment(const std::string& kind, const fs::path& config_path, const fs::path& out_dir,
                    const std::string& formats) {
  const scm::MonteCarloConfig config = scm::load_config(config_path);
  const scm::ReportFormats wanted = scm::parse_formats(formats);
  ensure_dir(out_dir);
  const scm::ExperimentResult result =
      kind == "convergence" ? scm::run_convergence(config) : scm::run_optimality(config);
  scm::emit_report(result, out_dir, wanted);
  std::cout << scm::result_csv_text(result);
  if (result.propensity_failures > 0) {
    std::cerr << "note: " << result.propensity_failures
              << " propensity fits hit the iteration cap\n";
  }
}

void run_report(const fs::path& in_dir, const fs::path& out_dir, const std::string& formats) {
  const scm::ReportFormats wanted = scm::parse_formats(formats);
  ensure_dir(out_dir);
  std::size_t found = 0;
  if (fs::is_regular_file(in_dir)) {
    scm::emit_report(scm::load_result_csv(in_dir), out_dir, wanted);
    return;
  }
  for (const char* kind : {"convergence", "optimality"}) {
    const fs::path csv = in_dir / (std::string(kind) + ".csv");
    if (!fs::exists(csv)) continue;
    scm::emit_report(scm::load_result_csv(csv), out_dir, wanted);
    ++found;
  }
  if (found == 0) throw scm::DataError("no convergence.csv or optimality.csv in " + in_dir.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-control weight estimation and Monte Carlo risk experiments"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "Kernel backend: scalar, avx2, neon or auto");

  fs::path config_path, out_dir, in_dir, report_out;
  std::string formats = "csv,plotdata,svg";
  std::string report_formats = "csv,svg";

  auto* simulate = app.add_subcommand("simulate", "Write simulated panels for every grid cell and replication");
  simulate->add_option("--config", config_path, "Config file")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit one estimator to a panel CSV and write JSON");
  fit->add_option("--panel", fit_args.panel, "Panel CSV")->required();
  fit->add_option("--method", fit_args.method, "SCM, DSC, DID, EQUAL, SEL, PSM or IPW")->required();
  fit->add_option("--clower", fit_args.c_lower, "Weights are bounded below by -clower");
  fit->add_option("--cupper", fit_args.c_upper, "Weights are bounded above by cupper");
  fit->add_option("--ridge", fit_args.ridge, "Ridge penalty of the propensity model");
  fit->add_option("--psm-k", fit_args.psm_k, "Nearest neighbours for PSM");
  fit->add_option("--dlower", fit_args.d_lower, "Intercept lower bound (DSC)");
  fit->add_option("--dupper", fit_args.d_upper, "Intercept upper bound (DSC)");
  fit->add_option("--out", fit_args.out, "Output JSON file ('-' for stdout)");

  auto* convergence = app.add_subcommand("convergence", "Weight-convergence Monte Carlo");
  convergence->add_option("--config", config_path, "Config file")->required();
  convergence->add_option("--out", out_dir, "Output directory")->required();
  convergence->add_option("--formats", formats, "Comma-separated subset of csv,plotdata,svg");

  auto* optimality = app.add_subcommand("optimality", "Risk-ratio Monte Carlo");
  optimality->add_option("--config", config_path, "Config file")->required();
  optimality->add_option("--out", out_dir, "Output directory")->required();
  optimality->add_option("--formats", formats, "Comma-separated subset of csv,plotdata,svg");

  auto* report = app.add_subcommand("report", "Re-render reports from result CSVs");
  report->add_option("--in", in_dir, "A result CSV, or a directory holding convergence.csv / optimality.csv")->required();
  report->add_option("--out", report_out, "Output directory (defaults to --in)");
  report->add_option("--formats", report_formats, "Comma-separated subset of csv,plotdata,svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!kernels.empty()) scm::kernels::set_active(scm::kernels::parse_backend(kernels));
    if (*simulate) {
      run_simulate(config_path, out_dir);
    } else if (*fit) {
      run_fit(fit_args);
    } else if (*convergence) {
      run_experiment("convergence", config_path, out_dir, formats);
    } else if (*optimality) {
      run_experiment("optimality", config_path, out_dir, formats);
    } else if (*report) {
      const fs::path dest = !report_out.empty()            ? report_out
                             : fs::is_regular_file(in_dir) ? fs::absolute(in_dir).parent_path()
                                                           : in_dir;
      run_report(in_dir, dest, report_formats);
    }
  } catch (const scm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const scm::InfeasibleConstraints& e) {
    std::cerr << "infeasible constraints: " << e.what() << "\n";
    return kExitConfig;
  } catch (const scm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const scm::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
