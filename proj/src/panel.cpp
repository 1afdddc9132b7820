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

#include "scm/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "scm/errors.hpp"

namespace scm {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

PanelData::PanelData(Matrix outcomes, Matrix covariates, std::size_t t0, std::size_t t1,
                     std::vector<std::string> unit_labels)
    : outcomes_(std::move(outcomes)),
      covariates_(std::move(covariates)),
      t0_(t0),
      t1_(t1),
      unit_labels_(std::move(unit_labels)) {
  if (outcomes_.rows() < 2) throw DataError("panel needs a treated unit and at least one control");
  if (t0_ < 1 || t1_ < 1) throw DataError("panel needs T0 >= 1 and T1 >= 1");
  if (static_cast<std::size_t>(outcomes_.cols()) != t0_ + t1_) {
    throw DataError("outcome matrix has " + std::to_string(outcomes_.cols()) +
                    " periods, expected T0 + T1 = " + std::to_string(t0_ + t1_));
  }
  if (covariates_.size() == 0) covariates_.resize(outcomes_.rows(), 0);
  if (covariates_.rows() != outcomes_.rows()) {
    throw DataError("covariate rows do not match the number of units");
  }
  if (!outcomes_.allFinite() || !covariates_.allFinite()) {
    throw DataError("panel contains non-finite values");
  }
  if (!unit_labels_.empty() && unit_labels_.size() != num_units()) {
    throw DataError("expected " + std::to_string(num_units()) + " unit labels, got " +
                    std::to_string(unit_labels_.size()));
  }
}

std::vector<std::string> PanelData::effective_labels() const {
  if (!unit_labels_.empty()) return unit_labels_;
  std::vector<std::string> labels;
  labels.reserve(num_units());
  for (std::size_t i = 0; i < num_units(); ++i) labels.push_back("u" + std::to_string(i));
  return labels;
}

Matrix PanelData::pre_outcomes() const {
  return outcomes_.leftCols(static_cast<Eigen::Index>(t0_));
}

Matrix PanelData::post_outcomes() const {
  return outcomes_.rightCols(static_cast<Eigen::Index>(t1_));
}

bool operator==(const PanelData& a, const PanelData& b) {
  return a.t0_ == b.t0_ && a.t1_ == b.t1_ && a.outcomes_.rows() == b.outcomes_.rows() &&
         a.covariates_.cols() == b.covariates_.cols() && a.outcomes_ == b.outcomes_ &&
         a.covariates_ == b.covariates_ && a.effective_labels() == b.effective_labels();
}

PredictorMatrix build_predictors(const PanelData& panel) {
  const auto t0 = static_cast<Eigen::Index>(panel.t0());
  const auto r = static_cast<Eigen::Index>(panel.num_covariates());
  const auto j = static_cast<Eigen::Index>(panel.num_controls());
  PredictorMatrix pred;
  pred.t0 = panel.t0();
  pred.target.resize(t0 + r);
  pred.controls.resize(t0 + r, j);
  const Matrix& y = panel.outcomes();
  const Matrix& z = panel.covariates();
  pred.target.head(t0) = y.row(0).head(t0).transpose();
  pred.target.tail(r) = z.row(0).transpose();
  for (Eigen::Index c = 0; c < j; ++c) {
    pred.controls.col(c).head(t0) = y.row(c + 1).head(t0).transpose();
    pred.controls.col(c).tail(r) = z.row(c + 1).transpose();
  }
  return pred;
}

Matrix unit_characteristics(const PanelData& panel) {
  const auto t0 = static_cast<Eigen::Index>(panel.t0());
  const auto r = static_cast<Eigen::Index>(panel.num_covariates());
  Matrix x(static_cast<Eigen::Index>(panel.num_units()), t0 + r);
  x.leftCols(t0) = panel.outcomes().leftCols(t0);
  x.rightCols(r) = panel.covariates();
  return x;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw DataError("cannot format value");
  return std::string(buf, ptr);
}

PanelData load_panel_csv(const std::filesystem::path& path, const ColumnSpec& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open panel file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("panel file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  const auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("panel file lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t unit_col = column_of(schema.unit);
  const std::size_t time_col = column_of(schema.time);
  const std::size_t outcome_col = column_of(schema.outcome);
  const std::size_t treated_col = column_of(schema.treated);
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != unit_col && c != time_col && c != outcome_col && c != treated_col) {
        cov_names.push_back(header[c]);
      }
    }
  }
  for (const auto& name : cov_names) cov_cols.push_back(column_of(name));

  struct Cell {
    std::optional<double> outcome;
    bool treated = false;
    std::vector<std::optional<double>> covariates;
  };
  std::vector<std::string> unit_order;
  std::unordered_map<std::string, std::size_t> unit_index;
  std::map<double, std::size_t> times;  // value -> placeholder, ordered
  std::map<std::pair<std::size_t, double>, Cell> cells;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string unit = trim(fields[unit_col]);
    const auto time = parse_double(fields[time_col]);
    if (unit.empty() || !time) {
      throw DataError("line " + std::to_string(line_no) + ": missing or invalid unit/time");
    }
    if (!unit_index.contains(unit)) {
      unit_index.emplace(unit, unit_order.size());
      unit_order.push_back(unit);
    }
    times.emplace(*time, 0);
    const auto key = std::make_pair(unit_index.at(unit), *time);
    if (cells.contains(key)) {
      throw DataError("duplicate row for (" + unit + "," + trim(fields[time_col]) + ")");
    }
    Cell cell;
    const std::string outcome_text = trim(fields[outcome_col]);
    if (!outcome_text.empty()) {
      cell.outcome = parse_double(outcome_text);
      if (!cell.outcome || !std::isfinite(*cell.outcome)) {
        throw DataError("line " + std::to_string(line_no) + ": non-numeric outcome '" +
                        outcome_text + "'");
      }
    }
    const std::string flag = trim(fields[treated_col]);
    if (flag == "1") {
      cell.treated = true;
    } else if (flag != "0") {
      throw DataError("line " + std::to_string(line_no) + ": treated must be 0 or 1, got '" +
                      flag + "'");
    }
    for (std::size_t c : cov_cols) {
      const std::string text = trim(fields[c]);
      if (text.empty()) {
        cell.covariates.push_back(std::nullopt);
        continue;
      }
      const auto v = parse_double(text);
      if (!v || !std::isfinite(*v)) {
        throw DataError("line " + std::to_string(line_no) + ": non-numeric covariate '" + text +
                        "'");
      }
      cell.covariates.push_back(v);
    }
    cells.emplace(key, std::move(cell));
  }
  if (unit_order.empty()) throw DataError("panel file has no data rows");

  std::vector<double> grid;
  for (const auto& [t, unused] : times) grid.push_back(t);

  // Missing cells: absent rows and empty outcome/covariate fields alike.
  std::vector<std::string> missing;
  for (std::size_t u = 0; u < unit_order.size(); ++u) {
    for (double t : grid) {
      const auto it = cells.find({u, t});
      bool gap = it == cells.end() || !it->second.outcome;
      if (!gap) {
        for (const auto& c : it->second.covariates) gap = gap || !c;
      }
      if (gap) missing.push_back("(" + unit_order[u] + "," + format_double(t) + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "panel has missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }

  std::vector<std::size_t> treated_units;
  for (std::size_t u = 0; u < unit_order.size(); ++u) {
    for (double t : grid) {
      if (cells.at({u, t}).treated) {
        treated_units.push_back(u);
        break;
      }
    }
  }
  if (treated_units.empty()) throw DataError("no unit is flagged treated");
  if (treated_units.size() > 1) {
    std::string msg = "multiple treated units:";
    for (std::size_t u : treated_units) msg += " " + unit_order[u];
    throw DataError(msg);
  }
  const std::size_t treated = treated_units.front();

  double treatment_time = 0.0;
  if (schema.treatment_time) {
    treatment_time = *schema.treatment_time;
  } else {
    treatment_time = grid.back();
    for (double t : grid) {
      if (cells.at({treated, t}).treated) {
        treatment_time = t;
        break;
      }
    }
    if (treatment_time == grid.front()) {
      throw DataError("treated unit is flagged in every period; set the treatment time explicitly");
    }
  }
  const auto t0 = static_cast<std::size_t>(
      std::count_if(grid.begin(), grid.end(), [&](double t) { return t < treatment_time; }));
  const std::size_t t1 = grid.size() - t0;
  if (t0 == 0) throw DataError("no pretreatment periods before the treatment time");
  if (t1 == 0) throw DataError("no posttreatment periods at or after the treatment time");

  std::vector<std::size_t> rows{treated};
  for (std::size_t u = 0; u < unit_order.size(); ++u) {
    if (u != treated) rows.push_back(u);
  }

  const auto n_units = static_cast<Eigen::Index>(rows.size());
  Matrix outcomes(n_units, static_cast<Eigen::Index>(grid.size()));
  Matrix covariates(n_units, static_cast<Eigen::Index>(cov_cols.size()));
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < n_units; ++i) {
    const std::size_t u = rows[static_cast<std::size_t>(i)];
    labels.push_back(unit_order[u]);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Cell& cell = cells.at({u, grid[k]});
      outcomes(i, static_cast<Eigen::Index>(k)) = *cell.outcome;
      for (std::size_t c = 0; c < cov_cols.size(); ++c) {
        const double v = *cell.covariates[c];
        if (k == 0) {
          covariates(i, static_cast<Eigen::Index>(c)) = v;
        } else if (v != covariates(i, static_cast<Eigen::Index>(c))) {
          throw DataError("covariate '" + cov_names[c] + "' varies over time for unit " +
                          unit_order[u]);
        }
      }
    }
  }
  return PanelData(std::move(outcomes), std::move(covariates), t0, t1, std::move(labels));
}

void write_panel_csv(const PanelData& panel, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write panel file " + path.string());
  out << "unit,time,outcome,treated";
  for (std::size_t c = 0; c < panel.num_covariates(); ++c) out << ",z" << (c + 1);
  out << '\n';
  const auto labels = panel.effective_labels();
  const auto t0 = static_cast<long long>(panel.t0());
  for (std::size_t i = 0; i < panel.num_units(); ++i) {
    for (std::size_t k = 0; k < panel.num_periods(); ++k) {
      const long long time = static_cast<long long>(k) - t0 + 1;
      const bool treated = i == 0 && time >= 1;
      out << labels[i] << ',' << time << ',' << format_double(panel.outcome(i, k)) << ','
          << (treated ? 1 : 0);
      for (std::size_t c = 0; c < panel.num_covariates(); ++c) {
        out << ',' << format_double(panel.covariates()(static_cast<Eigen::Index>(i),
                                                       static_cast<Eigen::Index>(c)));
      }
      out << '\n';
    }
  }
  if (!out) throw DataError("failed while writing panel file " + path.string());
}

}  // namespace scm
