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
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "scm/errors.hpp"
#include "scm/experiments.hpp"
#include "scm/panel.hpp"

namespace scm {
namespace {

constexpr const char* kCsvHeader = "J,T0,estimator,metric,mean,stderr,R";

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (T0, mean)
};

struct PlotPanel {
  std::string title;
  std::string metric;
  std::vector<Series> series;
};

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Convergence: one panel, one series per J. Optimality: one panel per J, one
// series per estimator in first-appearance order.
std::vector<PlotPanel> plot_panels(const ExperimentResult& result) {
  std::vector<PlotPanel> panels;
  if (result.rows.empty()) return panels;
  const std::string metric = result.rows.front().metric;
  std::vector<std::size_t> js;
  std::vector<std::string> estimators;
  for (const auto& row : result.rows) {
    js.push_back(row.j);
    if (std::find(estimators.begin(), estimators.end(), row.estimator) == estimators.end()) {
      estimators.push_back(row.estimator);
    }
  }
  js = sorted_unique(js);
  const auto points_for = [&](std::size_t j, const std::string& est) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : result.rows) {
      if (row.j == j && row.estimator == est) pts.emplace_back(static_cast<double>(row.t0), row.mean);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
  };
  if (result.kind == "convergence") {
    PlotPanel panel{"Average |w_hat - w_opt|", metric, {}};
    for (std::size_t j : js) panel.series.push_back({"J=" + std::to_string(j), points_for(j, estimators.front())});
    panels.push_back(std::move(panel));
  } else {
    for (std::size_t j : js) {
      PlotPanel panel{"Average risk ratio, J=" + std::to_string(j), metric, {}};
      for (const auto& est : estimators) panel.series.push_back({est, points_for(j, est)});
      panels.push_back(std::move(panel));
    }
  }
  return panels;
}

std::string svg_number(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

void write_plot_tsv(const PlotPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<double> xs;
  for (const auto& s : panel.series) {
    for (const auto& p : s.points) xs.push_back(p.first);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  out << "T0";
  for (const auto& s : panel.series) out << '\t' << s.name;
  out << '\n';
  for (double x : xs) {
    out << format_double(x);
    for (const auto& s : panel.series) {
      const auto it = std::find_if(s.points.begin(), s.points.end(), [&](const auto& p) { return p.first == x; });
      out << '\t' << (it == s.points.end() ? std::string("nan") : format_double(it->second));
    }
    out << '\n';
  }
}

void write_svg(const std::vector<PlotPanel>& panels, const std::filesystem::path& path) {
  constexpr double kPanelWidth = 560.0;
  constexpr double kPanelHeight = 400.0;
  constexpr double kLeft = 80.0, kRight = 130.0, kTop = 40.0, kBottom = 60.0;
  static const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(1, panels.size()));
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_number(width) << "\" height=\""
      << svg_number(kPanelHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double ox = kPanelWidth * static_cast<double>(p);
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : panel.series) {
      for (const auto& [x, y] : s.points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        if (std::isfinite(y)) {
          ymin = std::min(ymin, y);
          ymax = std::max(ymax, y);
        }
      }
    }
    if (!std::isfinite(xmin)) continue;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
    const double pad = ymax > ymin ? 0.05 * (ymax - ymin) : 0.5 * std::max(1e-12, std::abs(ymin));
    ymin -= pad;
    ymax += pad;
    const double plot_w = kPanelWidth - kLeft - kRight;
    const double plot_h = kPanelHeight - kTop - kBottom;
    const auto sx = [&](double x) { return ox + kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    const auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

    out << "<text x=\"" << svg_number(ox + kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\">"
        << panel.title << "</text>\n";
    out << "<rect x=\"" << svg_number(ox + kLeft) << "\" y=\"" << svg_number(kTop) << "\" width=\""
        << svg_number(plot_w) << "\" height=\"" << svg_number(plot_h)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::vector<double> xticks;
    for (const auto& s : panel.series) {
      for (const auto& pt : s.points) xticks.push_back(pt.first);
    }
    std::sort(xticks.begin(), xticks.end());
    xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());
    for (double x : xticks) {
      out << "<line x1=\"" << svg_number(sx(x)) << "\" y1=\"" << svg_number(kTop + plot_h) << "\" x2=\""
          << svg_number(sx(x)) << "\" y2=\"" << svg_number(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << svg_number(sx(x)) << "\" y=\"" << svg_number(kTop + plot_h + 18)
          << "\" text-anchor=\"middle\">" << svg_number(x) << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
      const double y = ymin + (ymax - ymin) * k / 4.0;
      out << "<line x1=\"" << svg_number(ox + kLeft - 5) << "\" y1=\"" << svg_number(sy(y)) << "\" x2=\""
          << svg_number(ox + kLeft) << "\" y2=\"" << svg_number(sy(y)) << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << svg_number(ox + kLeft - 8) << "\" y=\"" << svg_number(sy(y) + 4)
          << "\" text-anchor=\"end\">" << svg_number(y) << "</text>\n";
    }
    out << "<text x=\"" << svg_number(ox + kLeft + plot_w / 2) << "\" y=\""
        << svg_number(kPanelHeight - 20) << "\" text-anchor=\"middle\">T0</text>\n";
    const double label_y = kTop + plot_h / 2;
    out << "<text x=\"" << svg_number(ox + 18) << "\" y=\"" << svg_number(label_y)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << svg_number(ox + 18) << " "
        << svg_number(label_y) << ")\">" << panel.metric << "</text>\n";

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const Series& series = panel.series[s];
      const char* colour = kColours[s % (sizeof(kColours) / sizeof(kColours[0]))];
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"";
      if (s % 2 == 1) out << " stroke-dasharray=\"6 3\"";
      out << " points=\"";
      for (const auto& [x, y] : series.points) out << svg_number(sx(x)) << "," << svg_number(sy(y)) << " ";
      out << "\"/>\n";
      for (const auto& [x, y] : series.points) {
        out << "<circle cx=\"" << svg_number(sx(x)) << "\" cy=\"" << svg_number(sy(y))
            << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
      }
      const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
      const double lx = ox + kLeft + plot_w + 12.0;
      out << "<line x1=\"" << svg_number(lx) << "\" y1=\"" << svg_number(ly - 4) << "\" x2=\""
          << svg_number(lx + 24) << "\" y2=\"" << svg_number(ly - 4) << "\" stroke=\"" << colour
          << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << svg_number(lx + 30) << "\" y=\"" << svg_number(ly) << "\">" << series.name
          << "</text>\n";
    }
  }
  out << "</svg>\n";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

ReportFormats parse_formats(const std::string& list) {
  ReportFormats formats{false, false, false};
  for (const auto& item : split(list, ',')) {
    if (item == "csv") {
      formats.csv = true;
    } else if (item == "plotdata") {
      formats.plotdata = true;
    } else if (item == "svg") {
      formats.svg = true;
    } else if (!item.empty()) {
      throw ConfigError("unknown report format '" + item + "' (expected csv, plotdata, svg)");
    }
  }
  return formats;
}

std::string result_csv_text(const ExperimentResult& result) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& row : result.rows) {
    out << row.j << ',' << row.t0 << ',' << row.estimator << ',' << row.metric << ','
        << format_double(row.mean) << ',' << format_double(row.std_error) << ',' << row.replications
        << '\n';
  }
  return out.str();
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir,
                 const ReportFormats& formats) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw DataError("cannot create output directory " + out_dir.string());
  }
  if (formats.csv) {
    const auto path = out_dir / (result.kind + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << result_csv_text(result);
    if (!out) throw DataError("failed while writing " + path.string());
  }
  const auto panels = plot_panels(result);
  if (formats.plotdata) {
    if (result.kind == "convergence") {
      for (const auto& panel : panels) write_plot_tsv(panel, out_dir / (result.kind + ".plot.tsv"));
    } else {
      std::vector<std::size_t> js;
      for (const auto& row : result.rows) js.push_back(row.j);
      js = sorted_unique(js);
      for (std::size_t p = 0; p < panels.size(); ++p) {
        write_plot_tsv(panels[p], out_dir / (result.kind + "_J" + std::to_string(js[p]) + ".plot.tsv"));
      }
    }
  }
  if (formats.svg) write_svg(panels, out_dir / (result.kind + ".svg"));
}

ExperimentResult load_result_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  ExperimentResult result;
  result.kind = path.stem().string();
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw DataError(path.string() + ": expected header '" + std::string(kCsvHeader) + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw DataError(path.string() + ": line " + std::to_string(line_no) + " malformed");
    try {
      ResultRow row;
      row.j = std::stoull(f[0]);
      row.t0 = std::stoull(f[1]);
      row.estimator = f[2];
      row.metric = f[3];
      row.mean = std::stod(f[4]);
      row.std_error = std::stod(f[5]);
      row.replications = std::stoull(f[6]);
      result.rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has invalid numbers");
    }
  }
  return result;
}

}  // namespace scm
