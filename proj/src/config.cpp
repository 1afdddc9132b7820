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

#include "scm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "scm/errors.hpp"
#include "scm/panel.hpp"

namespace scm {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

std::vector<std::size_t> parse_counts(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number<std::size_t>(key, item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(items[i]);
  }
  return s;
}

}  // namespace

void MonteCarloConfig::validate() const {
  if (j_values.empty() || t0_values.empty()) throw ConfigError("j_values and t0_values must be nonempty");
  for (auto j : j_values) {
    if (j < 1) throw ConfigError("j_values entries must be >= 1");
  }
  for (auto t : t0_values) {
    if (t < 1) throw ConfigError("t0_values entries must be >= 1");
  }
  if (t1 < 1) throw ConfigError("t1 must be >= 1");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (estimators.empty()) throw ConfigError("estimators must be nonempty");
  if (!(ridge_lambda > 0.0) || !std::isfinite(ridge_lambda)) {
    throw ConfigError("ridge_lambda must be positive");
  }
  if (!std::isfinite(b)) throw ConfigError("b must be finite");
  if (psm_k < 1) throw ConfigError("psm_k must be >= 1");
  for (auto j : j_values) {
    if (psm_k > j) throw ConfigError("psm_k exceeds the number of controls J=" + std::to_string(j));
    try {
      ConstraintSet{c_lower, c_upper, intercept_domain}.validate(j);
    } catch (const InfeasibleConstraints& e) {
      throw ConfigError(e.what());
    }
  }
}

MonteCarloConfig parse_config(const std::string& text) {
  MonteCarloConfig config;
  std::set<std::string> seen;
  const std::map<std::string, std::function<void(const std::string&)>> handlers{
      {"j_values", [&](const std::string& v) { config.j_values = parse_counts("j_values", v); }},
      {"t0_values", [&](const std::string& v) { config.t0_values = parse_counts("t0_values", v); }},
      {"t1", [&](const std::string& v) { config.t1 = parse_number<std::size_t>("t1", v); }},
      {"replications",
       [&](const std::string& v) { config.replications = parse_number<std::size_t>("replications", v); }},
      {"master_seed",
       [&](const std::string& v) { config.master_seed = parse_number<std::uint64_t>("master_seed", v); }},
      {"estimators",
       [&](const std::string& v) {
         config.estimators.clear();
         for (const auto& name : split_list(v)) config.estimators.push_back(parse_method(name));
       }},
      {"c_lower", [&](const std::string& v) { config.c_lower = parse_number<double>("c_lower", v); }},
      {"c_upper", [&](const std::string& v) { config.c_upper = parse_number<double>("c_upper", v); }},
      {"intercept_domain",
       [&](const std::string& v) {
         if (trim(v) == "auto") {
           config.intercept_domain.reset();
           return;
         }
         const auto items = split_list(v);
         if (items.size() != 2) throw ConfigError("intercept_domain must be 'auto' or 'lower,upper'");
         config.intercept_domain = Interval{parse_number<double>("intercept_domain", items[0]),
                                            parse_number<double>("intercept_domain", items[1])};
       }},
      {"ridge_lambda",
       [&](const std::string& v) { config.ridge_lambda = parse_number<double>("ridge_lambda", v); }},
      {"b", [&](const std::string& v) { config.b = parse_number<double>("b", v); }},
      {"psm_k", [&](const std::string& v) { config.psm_k = parse_number<std::size_t>("psm_k", v); }},
      {"threads", [&](const std::string& v) { config.threads = parse_number<std::size_t>("threads", v); }},
  };

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    it->second(value);
  }
  config.validate();
  return config;
}

MonteCarloConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string to_config_text(const MonteCarloConfig& config) {
  std::ostringstream out;
  out << "j_values = " << join(config.j_values) << '\n';
  out << "t0_values = " << join(config.t0_values) << '\n';
  out << "t1 = " << config.t1 << '\n';
  out << "replications = " << config.replications << '\n';
  out << "master_seed = " << config.master_seed << '\n';
  out << "estimators = ";
  for (std::size_t i = 0; i < config.estimators.size(); ++i) {
    out << (i > 0 ? "," : "") << method_name(config.estimators[i]);
  }
  out << '\n';
  out << "c_lower = " << format_double(config.c_lower) << '\n';
  out << "c_upper = " << format_double(config.c_upper) << '\n';
  if (config.intercept_domain) {
    out << "intercept_domain = " << format_double(config.intercept_domain->lower) << ","
        << format_double(config.intercept_domain->upper) << '\n';
  } else {
    out << "intercept_domain = auto\n";
  }
  out << "ridge_lambda = " << format_double(config.ridge_lambda) << '\n';
  out << "b = " << format_double(config.b) << '\n';
  out << "psm_k = " << config.psm_k << '\n';
  out << "threads = " << config.threads << '\n';
  return out.str();
}

}  // namespace scm
