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

#ifndef URBANMPC__REFERENCE_PATH_HPP_
#define URBANMPC__REFERENCE_PATH_HPP_

/**
 * @file
 * @brief Arc-length parametrized reference route and per-stage reference generation.
 *
 * The route is piecewise linear in both position and speed. References are
 * regenerated every control cycle from the current projection and the speed
 * profile of the previous guess, so a stopped guess keeps its reference point.
 */

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace urbanmpc {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) { a += two_pi; }
  return a - std::numbers::pi;
}

/// Returns the representative of `a` (mod 2 pi) closest to `anchor`.
inline double unwrap_near(double a, double anchor) { return anchor + wrap_angle(a - anchor); }

struct RouteWaypoint
{
  double x{0.0};
  double y{0.0};
  double speed{0.0};
};

struct FrenetError
{
  double e_y{0.0};    ///< lateral error, positive left of travel [m]
  double e_psi{0.0};  ///< heading error in [-pi, pi] [rad]
  double kappa{0.0};  ///< curvature at the projection [1/m]
};

struct Projection
{
  double sigma{0.0};
  Eigen::Vector2d point{Eigen::Vector2d::Zero()};
  double tangent{0.0};
  FrenetError error{};
};

/// Piecewise-linear curve (x^c, y^c, v^c)(sigma). Immutable after construction.
class ReferenceCurve
{
public:
  ReferenceCurve() = default;

  explicit ReferenceCurve(std::span<const RouteWaypoint> waypoints)
  {
    if (waypoints.size() < 2) { throw std::invalid_argument("ReferenceCurve: need at least two waypoints"); }
    sigma_.reserve(waypoints.size());
    points_.reserve(waypoints.size());
    speeds_.reserve(waypoints.size());
    double s = 0.0;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      const Eigen::Vector2d p(waypoints[i].x, waypoints[i].y);
      if (!p.allFinite() || !std::isfinite(waypoints[i].speed)) {
        throw std::invalid_argument("ReferenceCurve: non-finite waypoint");
      }
      if (i > 0) {
        const double len = (p - points_.back()).norm();
        if (!(len > 0.0)) { throw std::invalid_argument("ReferenceCurve: consecutive waypoints coincide"); }
        s += len;
      }
      sigma_.push_back(s);
      points_.push_back(p);
      speeds_.push_back(waypoints[i].speed);
    }
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const Eigen::Vector2d d = points_[i + 1] - points_[i];
      headings_.push_back(std::atan2(d.y(), d.x()));
    }
    curvature_.resize(headings_.size(), 0.0);
    for (std::size_t i = 0; i < headings_.size(); ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = std::min(i + 1, headings_.size() - 1);
      if (lo == hi) { continue; }
      double span = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) { span += (j == i ? 1.0 : 0.5) * segment_length(j); }
      curvature_[i] = wrap_angle(headings_[hi] - headings_[lo]) / span;
    }
  }

  double length() const { return sigma_.back(); }
  std::size_t num_segments() const { return headings_.size(); }
  double segment_length(std::size_t i) const { return sigma_[i + 1] - sigma_[i]; }
  const std::vector<double> & breakpoints() const { return sigma_; }
  const std::vector<Eigen::Vector2d> & points() const { return points_; }
  const std::vector<double> & speeds() const { return speeds_; }

  /// Segment containing sigma (clamped). Breakpoints belong to the following segment.
  std::size_t segment_at(double sigma) const
  {
    if (sigma <= sigma_.front()) { return 0; }
    if (sigma >= sigma_.back()) { return num_segments() - 1; }
    const auto it = std::upper_bound(sigma_.begin(), sigma_.end(), sigma);
    return std::min<std::size_t>(static_cast<std::size_t>(it - sigma_.begin()) - 1, num_segments() - 1);
  }

  Eigen::Vector2d position(double sigma) const
  {
    const std::size_t i = segment_at(sigma);
    const double t = std::clamp((sigma - sigma_[i]) / segment_length(i), 0.0, 1.0);
    return (1.0 - t) * points_[i] + t * points_[i + 1];
  }

  double speed(double sigma) const
  {
    const std::size_t i = segment_at(sigma);
    const double t = std::clamp((sigma - sigma_[i]) / segment_length(i), 0.0, 1.0);
    return speeds_[i] + t * (speeds_[i + 1] - speeds_[i]);
  }

  double tangent(double sigma) const { return headings_[segment_at(sigma)]; }
  double curvature(double sigma) const { return curvature_[segment_at(sigma)]; }

  /**
   * @brief Closest point on the curve. Exact per-segment minimization; ties go to the
   * smaller sigma. `heading` only feeds the e_psi field.
   */
  Projection project(const Eigen::Vector2d & q, double heading = 0.0) const
  {
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    double best_t = 0.0;
    for (std::size_t i = 0; i < num_segments(); ++i) {
      const Eigen::Vector2d d = points_[i + 1] - points_[i];
      const double t = std::clamp((q - points_[i]).dot(d) / d.squaredNorm(), 0.0, 1.0);
      const double d2 = (points_[i] + t * d - q).squaredNorm();
      // strict comparison with a relative tolerance keeps the earliest minimizer
      if (i == 0 || d2 < best_d2 - 1e-12 * std::max(1.0, best_d2)) {
        best_d2 = d2;
        best_i = i;
        best_t = t;
      }
    }
    Projection out;
    out.sigma = sigma_[best_i] + best_t * segment_length(best_i);
    out.point = (1.0 - best_t) * points_[best_i] + best_t * points_[best_i + 1];
    out.tangent = headings_[best_i];
    const Eigen::Vector2d n(-std::sin(out.tangent), std::cos(out.tangent));
    out.error.e_y = (q - out.point).dot(n);
    out.error.e_psi = wrap_angle(heading - out.tangent);
    out.error.kappa = curvature_[best_i];
    return out;
  }

  /// Point at lateral offset `offset` (left positive) from the curve at sigma.
  Eigen::Vector2d offset_point(double sigma, double offset) const
  {
    const double th = tangent(sigma);
    return position(sigma) + offset * Eigen::Vector2d(-std::sin(th), std::cos(th));
  }

private:
  std::vector<double> sigma_;
  std::vector<Eigen::Vector2d> points_;
  std::vector<double> speeds_;
  std::vector<double> headings_;
  std::vector<double> curvature_;
};

/// sigma_{k+1} = sigma_k + v cos(e_psi) dt, clamped to [0, length].
inline double advance_sigma(double sigma, double v_guess, double e_psi, double dt, double length)
{
  return std::clamp(sigma + v_guess * std::cos(e_psi) * dt, 0.0, length);
}

struct ReferencePoint
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double v{0.0};
  double delta{0.0};
  double omega{0.0};
  double a{0.0};
  double delta_sp{0.0};
  double sigma{0.0};
};

/**
 * @brief Per-stage references r_0..r_N.
 *
 * guess_velocities and guess_headings hold N+1 entries (stages 0..N of the
 * previous guess). Headings come from atan2 of consecutive reference points and are
 * unwrapped next to the guess heading, since the vehicle heading is never wrapped.
 */
inline std::vector<ReferencePoint> build_references(
  double sigma0, std::span<const double> guess_velocities, std::span<const double> guess_headings,
  const ReferenceCurve & curve, double delta0, double dt)
{
  if (guess_velocities.size() != guess_headings.size() || guess_velocities.size() < 2) {
    throw std::invalid_argument("build_references: guess velocities/headings must both have N+1 >= 2 entries");
  }
  const std::size_t n_stages = guess_velocities.size();
  std::vector<ReferencePoint> refs(n_stages);

  double sigma = std::clamp(sigma0, 0.0, curve.length());
  for (std::size_t k = 0; k < n_stages; ++k) {
    ReferencePoint & r = refs[k];
    r.sigma = sigma;
    const Eigen::Vector2d p = curve.position(sigma);
    r.x = p.x();
    r.y = p.y();
    r.v = curve.speed(sigma);
    r.delta = delta0;
    r.omega = 0.0;
    r.a = 0.0;
    r.delta_sp = delta0;
    const double e_psi = wrap_angle(guess_headings[k] - curve.tangent(sigma));
    sigma = advance_sigma(sigma, guess_velocities[k], e_psi, dt, curve.length());
  }

  constexpr double kMinSeparation = 1e-9;
  bool have_heading = false;
  double last_heading = 0.0;
  for (std::size_t k = 0; k + 1 < n_stages; ++k) {
    const double dx = refs[k + 1].x - refs[k].x;
    const double dy = refs[k + 1].y - refs[k].y;
    if (std::hypot(dx, dy) >= kMinSeparation) {
      last_heading = std::atan2(dy, dx);
      have_heading = true;
    } else if (!have_heading) {
      last_heading = curve.tangent(refs[k].sigma);
      have_heading = true;
    }
    refs[k].theta = unwrap_near(last_heading, guess_headings[k]);
  }
  refs.back().theta = unwrap_near(refs[n_stages - 2].theta, guess_headings.back());
  return refs;
}

}  // namespace urbanmpc

#endif  // URBANMPC__REFERENCE_PATH_HPP_
