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

#ifndef URBANMPC__PEDESTRIAN_SOURCES_HPP_
#define URBANMPC__PEDESTRIAN_SOURCES_HPP_

// Ground-truth pedestrian motion for the simulator: recorded tracks replayed on
// the simulation clock and constant-speed walkers along the path graph.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "urbanmpc/pedestrian_prediction.hpp"
#include "urbanmpc/scenario_config.hpp"

namespace urbanmpc {

class RecordingError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Positions on the simulation clock: sample k is the recording at t = k dt.
struct PedestrianReplay
{
  double dt{0.05};
  std::vector<Eigen::Vector2d> samples;

  /// Holds the last sample past the end of the recording.
  Eigen::Vector2d at_step(std::size_t k) const { return samples[std::min(k, samples.size() - 1)]; }
};

/// Parses "t,px,py" rows. Blank lines and lines starting with '#' are skipped, as is
/// one leading header row whose first field is not a number.
inline std::vector<std::array<double, 3>> parse_recording(std::istream & in, const std::string & origin = "recording")
{
  std::vector<std::array<double, 3>> rows;
  std::string line;
  int lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    const auto pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos || line[pos] == '#') { continue; }
    std::array<double, 3> row{};
    std::size_t field = 0;
    bool ok = true;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto b = tok.find_first_not_of(" \t");
      const auto e = tok.find_last_not_of(" \t");
      if (b == std::string::npos || field >= 3) {
        ok = false;
        break;
      }
      const char * first = tok.data() + b;
      const char * last = tok.data() + e + 1;
      const auto res = std::from_chars(first, last, row[field]);
      if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(row[field])) {
        ok = false;
        break;
      }
      ++field;
    }
    if (!ok || field != 3) {
      if (first_content && rows.empty() && !ok && field == 0) {
        first_content = false;
        continue;  // header
      }
      throw RecordingError(origin + ": malformed row at line " + std::to_string(lineno));
    }
    first_content = false;
    if (!rows.empty() && !(row[0] > rows.back()[0])) {
      throw RecordingError(origin + ": timestamps not strictly increasing at line " + std::to_string(lineno));
    }
    rows.push_back(row);
  }
  if (rows.empty()) { throw RecordingError(origin + ": no samples"); }
  return rows;
}

/// Linear interpolation of a recording onto t = k dt, k = 0 .. ceil(t_last / dt).
inline PedestrianReplay resample_recording(const std::vector<std::array<double, 3>> & rows, double dt)
{
  if (!(dt > 0.0)) { throw std::invalid_argument("resample_recording: dt must be > 0"); }
  PedestrianReplay out;
  out.dt = dt;
  const double t_end = rows.back()[0];
  const auto n = static_cast<std::size_t>(std::max(0.0, std::ceil(t_end / dt - 1e-9))) + 1;
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t <= rows.front()[0]) {
      out.samples.emplace_back(rows.front()[1], rows.front()[2]);
      continue;
    }
    if (t >= t_end) {
      out.samples.emplace_back(rows.back()[1], rows.back()[2]);
      continue;
    }
    while (seg + 1 < rows.size() && rows[seg + 1][0] < t) { ++seg; }
    const auto & a = rows[seg];
    const auto & b = rows[seg + 1];
    const double w = (t - a[0]) / (b[0] - a[0]);
    out.samples.emplace_back((1.0 - w) * a[1] + w * b[1], (1.0 - w) * a[2] + w * b[2]);
  }
  return out;
}

inline PedestrianReplay replay_pedestrian(const std::filesystem::path & csv, double dt)
{
  std::ifstream in(csv);
  if (!in) { throw RecordingError("cannot open recording: " + csv.string()); }
  return resample_recording(parse_recording(in, csv.string()), dt);
}

/// True pedestrian motion for one scenario entry.
class PedestrianAgent
{
public:
  PedestrianAgent(const PedestrianSource & src, const PathGraph & graph, const std::filesystem::path & base_dir,
                  double dt)
  : dt_(dt)
  {
    if (!src.recording.empty()) {
      std::filesystem::path p(src.recording);
      if (p.is_relative()) { p = base_dir / p; }
      replay_ = replay_pedestrian(p, dt);
      recorded_ = true;
      for (std::size_t k = 1; k < replay_.samples.size(); ++k) {
        const Eigen::Vector2d d = replay_.samples[k] - replay_.samples[k - 1];
        if (d.norm() > 1e-9) {
          first_heading_ = std::atan2(d.y(), d.x());
          break;
        }
      }
    } else {
      for (const std::size_t n : src.route) { line_.push_back(graph.nodes[n]); }
      speed_ = src.speed;
      start_ = src.start_time;
      const Eigen::Vector2d d = line_[1] - line_[0];
      first_heading_ = std::atan2(d.y(), d.x());
    }
  }

  /// Position, speed and heading at step k (t = k dt).
  PedestrianState state(std::size_t k) const
  {
    PedestrianState s;
    if (recorded_) {
      const Eigen::Vector2d p = replay_.at_step(k);
      const Eigen::Vector2d q = k > 0 ? replay_.at_step(k - 1) : p;
      Eigen::Vector2d v = (p - q) / dt_;
      if (k == 0) { v = (replay_.at_step(1) - p) / dt_; }
      s.px = p.x();
      s.py = p.y();
      s.speed = v.norm();
      s.heading = s.speed > 1e-6 ? std::atan2(v.y(), v.x()) : heading_before(k);
      return s;
    }
    const double t = static_cast<double>(k) * dt_;
    const double dist = speed_ * std::max(0.0, t - start_);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < line_.size(); ++i) {
      const Eigen::Vector2d d = line_[i + 1] - line_[i];
      const double len = d.norm();
      const bool last = i + 2 == line_.size();
      if (dist <= acc + len || last) {
        const double w = std::min(1.0, (dist - acc) / len);
        const Eigen::Vector2d p = line_[i] + w * d;
        s.px = p.x();
        s.py = p.y();
        s.heading = std::atan2(d.y(), d.x());
        s.speed = (t > start_ && (dist < acc + len)) ? speed_ : 0.0;
        return s;
      }
      acc += len;
    }
    return s;
  }

private:
  double heading_before(std::size_t k) const
  {
    for (std::size_t j = std::min(k, replay_.samples.size() - 1); j > 0; --j) {
      const Eigen::Vector2d d = replay_.samples[j] - replay_.samples[j - 1];
      if (d.norm() > 1e-9) { return std::atan2(d.y(), d.x()); }
    }
    return first_heading_;
  }

  double dt_;
  bool recorded_{false};
  PedestrianReplay replay_;
  std::vector<Eigen::Vector2d> line_;
  double speed_{0.0};
  double start_{0.0};
  double first_heading_{0.0};
};

}  // namespace urbanmpc

#endif  // URBANMPC__PEDESTRIAN_SOURCES_HPP_
