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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scm/linalg.hpp"

namespace scm {

// Outcomes and time-invariant covariates for one treated unit (row 0) and J
// control units over T0 pretreatment and T1 posttreatment periods. Columns of
// `outcomes` run over the time grid {-T0+1, ..., T1}.
class PanelData {
 public:
  // Throws DataError unless J >= 1, T0 >= 1, T1 >= 1, dimensions agree and
  // every entry is finite. `unit_labels` may be empty or hold J+1 labels.
  PanelData(Matrix outcomes, Matrix covariates, std::size_t t0, std::size_t t1,
            std::vector<std::string> unit_labels = {});

  std::size_t num_controls() const { return static_cast<std::size_t>(outcomes_.rows()) - 1; }
  std::size_t num_units() const { return static_cast<std::size_t>(outcomes_.rows()); }
  std::size_t t0() const { return t0_; }
  std::size_t t1() const { return t1_; }
  std::size_t num_periods() const { return t0_ + t1_; }
  std::size_t num_covariates() const { return static_cast<std::size_t>(covariates_.cols()); }

  const Matrix& outcomes() const { return outcomes_; }
  const Matrix& covariates() const { return covariates_; }

  double outcome(std::size_t unit, std::size_t period) const {
    return outcomes_(static_cast<Eigen::Index>(unit), static_cast<Eigen::Index>(period));
  }

  // Labels as stored; empty when none were supplied.
  const std::vector<std::string>& unit_labels() const { return unit_labels_; }
  // Stored labels, or "u0".."uJ" when none were supplied.
  std::vector<std::string> effective_labels() const;

  // Pretreatment outcomes of every unit, (J+1) x T0.
  Matrix pre_outcomes() const;
  // Posttreatment outcomes of every unit, (J+1) x T1.
  Matrix post_outcomes() const;

  friend bool operator==(const PanelData& a, const PanelData& b);

 private:
  Matrix outcomes_;
  Matrix covariates_;
  std::size_t t0_;
  std::size_t t1_;
  std::vector<std::string> unit_labels_;
};

// Predictors stacked as pretreatment outcomes over covariates: target is X_0
// and column j of `controls` is X_j, both of length T0 + r.
struct PredictorMatrix {
  Vector target;
  Matrix controls;  // (T0 + r) x J
  std::size_t t0 = 0;  // normaliser of the pretreatment loss

  std::size_t num_controls() const { return static_cast<std::size_t>(controls.cols()); }
  std::size_t num_rows() const { return static_cast<std::size_t>(controls.rows()); }
};

PredictorMatrix build_predictors(const PanelData& panel);

// Predictor vectors X_i for all units as rows: (J+1) x (T0 + r).
Matrix unit_characteristics(const PanelData& panel);

struct ColumnSpec {
  std::string unit = "unit";
  std::string time = "time";
  std::string outcome = "outcome";
  std::string treated = "treated";
  // Covariate columns in order; empty means every column not named above.
  std::vector<std::string> covariates;
  // First posttreatment time. When unset it is taken as the earliest time at
  // which the treated unit's flag is 1.
  std::optional<double> treatment_time;
};

// Reads a balanced long-format panel. Times are rank-mapped onto the
// integer grid; the treated unit is moved to row 0 and controls keep their
// order of first appearance.
PanelData load_panel_csv(const std::filesystem::path& path, const ColumnSpec& schema = {});

// Writes `unit,time,outcome,treated[,covariates...]` with times -T0+1..T1 and
// treated = 1 exactly on the treated unit's posttreatment rows.
void write_panel_csv(const PanelData& panel, const std::filesystem::path& path);

// Round-trip decimal text for a double (17 significant digits).
std::string format_double(double value);

}  // namespace scm
