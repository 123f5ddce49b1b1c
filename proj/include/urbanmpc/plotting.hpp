// Copyright 2026 The urbanmpc Authors
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

#ifndef URBANMPC__PLOTTING_HPP_
#define URBANMPC__PLOTTING_HPP_

/**
 * @file
 * @brief Static SVG rendering of simulation logs.
 *
 * Output depends only on the inputs (fixed number formatting, no timestamps),
 * so equal logs give byte-identical files.
 *
 * Overhead views draw world coordinates inside a `scale(1,-1)` group so that
 * y points north. Ellipses carry `data-stage`, `data-hypothesis` and
 * `data-pedestrian` attributes; `rx`/`ry` are the logged semi-axes.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmpc/sim_log.hpp"

namespace urbanmpc {

enum class PlotKind { kOverhead, kTimeseries };

struct PlotSpec
{
  PlotKind kind{PlotKind::kTimeseries};
  std::vector<double> times;  ///< snapshot times for overhead plots [s]
  std::string out_dir;
};

namespace svg {

inline std::string num(double v)
{
  if (!std::isfinite(v)) { return "0"; }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s(buf);
  // trim trailing zeros for compactness
  while (!s.empty() && s.back() == '0') { s.pop_back(); }
  if (!s.empty() && s.back() == '.') { s.pop_back(); }
  if (s == "-0") { s = "0"; }
  return s;
}

struct Box
{
  double xmin{std::numeric_limits<double>::infinity()};
  double xmax{-std::numeric_limits<double>::infinity()};
  double ymin{std::numeric_limits<double>::infinity()};
  double ymax{-std::numeric_limits<double>::infinity()};

  void add(double x, double y)
  {
    if (!std::isfinite(x) || !std::isfinite(y)) { return; }
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  bool empty() const { return !(xmin <= xmax); }
};

inline std::string polyline(const nlohmann::json & pts, const std::string & cls, Box & box)
{
  std::ostringstream os;
  os << "<polyline class=\"" << cls << "\" points=\"";
  bool first = true;
  for (const auto & p : pts) {
    const double x = p.at(0).get<double>(), y = p.at(1).get<double>();
    box.add(x, y);
    if (!first) { os << ' '; }
    os << num(x) << ',' << num(y);
    first = false;
  }
  os << "\"/>\n";
  return os.str();
}

}  // namespace svg

/// Index of the row whose time is closest to t.
inline std::size_t nearest_row(const std::vector<double> & times, double t)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - t) < std::abs(times[best] - t)) { best = i; }
  }
  return best;
}

/**
 * @brief Top view at time t: road bounds, reference, open-loop plan,
 * predicted pedestrian positions with their uncertainty ellipses, vehicle and
 * true pedestrian positions.
 */
inline std::string render_overhead(const LogTable & log, const std::vector<nlohmann::json> & plans, double t)
{
  if (log.rows() == 0) { throw LogError("overhead plot: empty log"); }
  const std::vector<double> times = log.series("t");
  const std::size_t row = nearest_row(times, t);

  const nlohmann::json * plan = nullptr;
  for (const nlohmann::json & p : plans) {
    if (plan == nullptr || std::abs(p.at("t").get<double>() - t) < std::abs(plan->at("t").get<double>() - t)) {
      plan = &p;
    }
  }

  svg::Box box;
  std::ostringstream body;
  if (plan != nullptr) {
    body << svg::polyline(plan->at("road_left"), "road", box);
    body << svg::polyline(plan->at("road_right"), "road", box);
    body << svg::polyline(plan->at("reference"), "reference", box);
    body << svg::polyline(plan->at("plan"), "plan", box);
    for (const auto & pred : plan->at("predictions")) {
      const int ped = pred.at("pedestrian").get<int>();
      const int hyp = pred.at("hypothesis").get<int>();
      int k = 0;
      for (const auto & s : pred.at("stages")) {
        const double x = s.at(0).get<double>(), y = s.at(1).get<double>();
        const double la = s.at(2).get<double>(), lb = s.at(3).get<double>(), al = s.at(4).get<double>();
        box.add(x, y);
        const std::string cx = svg::num(x), cy = svg::num(y);
        body << "<circle class=\"predicted\" cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"0.12\"/>\n";
        body << "<ellipse class=\"uncertainty\" data-pedestrian=\"" << ped << "\" data-hypothesis=\"" << hyp
             << "\" data-stage=\"" << k << "\" cx=\"" << cx << "\" cy=\"" << cy << "\" rx=\"" << svg::num(la)
             << "\" ry=\"" << svg::num(lb) << "\" transform=\"rotate(" << svg::num(al * 180.0 / std::numbers::pi)
             << ' ' << cx << ' ' << cy << ")\"/>\n";
        ++k;
      }
    }
  }

  const double vx = log.number(row, "x"), vy = log.number(row, "y"), th = log.number(row, "theta");
  box.add(vx, vy);
  body << "<circle class=\"vehicle\" cx=\"" << svg::num(vx) << "\" cy=\"" << svg::num(vy) << "\" r=\"0.8\"/>\n";
  body << "<line class=\"vehicle\" x1=\"" << svg::num(vx) << "\" y1=\"" << svg::num(vy) << "\" x2=\""
       << svg::num(vx + 3.0 * std::cos(th)) << "\" y2=\"" << svg::num(vy + 3.0 * std::sin(th)) << "\"/>\n";
  for (const std::string & name : log.pedestrians()) {
    const double px = log.number(row, name + "_x"), py = log.number(row, name + "_y");
    box.add(px, py);
    body << "<circle class=\"pedestrian\" data-name=\"" << name << "\" cx=\"" << svg::num(px) << "\" cy=\""
         << svg::num(py) << "\" r=\"0.4\"/>\n";
  }

  const double margin = 5.0;
  const double x0 = box.xmin - margin, y0 = box.ymin - margin;
  const double w = box.xmax - box.xmin + 2 * margin, h = box.ymax - box.ymin + 2 * margin;
  const double px_per_m = 800.0 / std::max(w, h);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg::num(w * px_per_m) << "\" height=\""
     << svg::num(h * px_per_m) << "\" viewBox=\"" << svg::num(x0) << ' ' << svg::num(-(y0 + h)) << ' ' << svg::num(w)
     << ' ' << svg::num(h) << "\">\n";
  os << "<style>"
        ".road{fill:none;stroke:#000;stroke-width:0.15}"
        ".reference{fill:none;stroke:#1f77b4;stroke-width:0.12;stroke-dasharray:0.6 0.4}"
        ".plan{fill:none;stroke:#d62728;stroke-width:0.15}"
        ".predicted{fill:#2ca02c}"
        ".uncertainty{fill:none;stroke:#2ca02c;stroke-width:0.05;stroke-opacity:0.6}"
        ".vehicle{fill:#444;stroke:#444;stroke-width:0.2}"
        ".pedestrian{fill:#ff7f0e}"
        "</style>\n";
  os << "<title>t = " << svg::num(times[row]) << " s</title>\n";
  os << "<g transform=\"scale(1,-1)\">\n" << body.str() << "</g>\n</svg>\n";
  return os.str();
}

/// Four stacked panels: speed, steering angle with its setpoint, acceleration, steering rate.
inline std::string render_timeseries(const LogTable & log)
{
  if (log.rows() == 0) { throw LogError("timeseries plot: empty log"); }
  struct Trace
  {
    std::string column;
    std::string color;
  };
  struct Panel
  {
    std::string label;
    std::vector<Trace> traces;
  };
  const std::vector<Panel> panels{
    {"v [m/s]", {{"v", "#1f77b4"}}},
    {"delta, delta_sp [rad]", {{"delta", "#1f77b4"}, {"delta_sp_cmd", "#d62728"}}},
    {"a [m/s^2]", {{"a_cmd", "#1f77b4"}}},
    {"omega [rad/s]", {{"omega", "#1f77b4"}}},
  };
  const std::vector<double> t = log.series("t");
  const double t0 = t.front(), t1 = std::max(t.back(), t.front() + 1e-9);
  const double W = 900, PH = 180, L = 70, R = 20, T = 20, GAP = 40;
  const double pw = W - L - R;
  const double H = T + panels.size() * (PH + GAP);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg::num(W) << "\" height=\"" << svg::num(H)
     << "\" viewBox=\"0 0 " << svg::num(W) << ' ' << svg::num(H) << "\">\n";
  os << "<style>text{font:11px sans-serif}.frame{fill:none;stroke:#000;stroke-width:1}"
        ".grid{stroke:#ddd;stroke-width:0.5}.trace{fill:none;stroke-width:1.2}</style>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel & panel = panels[p];
    std::vector<std::vector<double>> data;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Trace & tr : panel.traces) {
      data.push_back(log.series(tr.column));
      for (const double v : data.back()) {
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    if (!(lo <= hi)) { lo = -1.0, hi = 1.0; }
    const double span = hi - lo;
    const double pad = span > 1e-9 ? 0.08 * span : std::max(1e-3, 0.1 * std::abs(hi)) + 0.5;
    lo -= pad;
    hi += pad;
    const double top = T + p * (PH + GAP);
    auto X = [&](double tv) { return L + (tv - t0) / (t1 - t0) * pw; };
    auto Y = [&](double v) { return top + (hi - v) / (hi - lo) * PH; };

    os << "<g class=\"panel\" data-panel=\"" << p << "\">\n";
    os << "<rect class=\"frame\" x=\"" << svg::num(L) << "\" y=\"" << svg::num(top) << "\" width=\"" << svg::num(pw)
       << "\" height=\"" << svg::num(PH) << "\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double v = lo + (hi - lo) * i / 4.0;
      char lbl[32];
      std::snprintf(lbl, sizeof(lbl), "%.3g", v);
      os << "<line class=\"grid\" x1=\"" << svg::num(L) << "\" x2=\"" << svg::num(L + pw) << "\" y1=\""
         << svg::num(Y(v)) << "\" y2=\"" << svg::num(Y(v)) << "\"/>";
      os << "<text x=\"" << svg::num(L - 4) << "\" y=\"" << svg::num(Y(v) + 4) << "\" text-anchor=\"end\">" << lbl
         << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
      const double tv = t0 + (t1 - t0) * i / 5.0;
      char lbl[32];
      std::snprintf(lbl, sizeof(lbl), "%.3g", tv);
      os << "<text x=\"" << svg::num(X(tv)) << "\" y=\"" << svg::num(top + PH + 14) << "\" text-anchor=\"middle\">"
         << lbl << "</text>\n";
    }
    os << "<text x=\"" << svg::num(L) << "\" y=\"" << svg::num(top - 5) << "\">" << panel.label << "</text>\n";
    for (std::size_t k = 0; k < panel.traces.size(); ++k) {
      os << "<polyline class=\"trace\" data-column=\"" << panel.traces[k].column << "\" stroke=\""
         << panel.traces[k].color << "\" points=\"";
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) { os << ' '; }
        os << svg::num(X(t[i])) << ',' << svg::num(Y(data[k][i]));
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "<text x=\"" << svg::num(L + pw / 2) << "\" y=\"" << svg::num(H - 8) << "\" text-anchor=\"middle\">t [s]</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace urbanmpc

#endif  // URBANMPC__PLOTTING_HPP_
