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

#ifndef URBANMPC__PEDESTRIAN_PREDICTION_HPP_
#define URBANMPC__PEDESTRIAN_PREDICTION_HPP_

/**
 * @file
 * @brief Map-aware, multi-hypothesis pedestrian prediction.
 *
 * A measured pedestrian is attached to the nearest edge of a walkway graph.
 * Every simple route reachable within the horizon becomes one hypothesis. Along
 * each route a unicycle (position, speed, heading) is closed with a proportional
 * regulator and rolled forward with explicit Euler; its covariance is propagated
 * with the closed-loop Jacobian and reported as an ellipse per stage.
 */

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "urbanmpc/reference_path.hpp"

namespace urbanmpc {

/// Walkway graph: sidewalks and crosswalks as directed straight edges.
struct PathGraph
{
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t add_node(double x, double y)
  {
    nodes.emplace_back(x, y);
    return nodes.size() - 1;
  }

  void add_edge(std::size_t from, std::size_t to) { edges.emplace_back(from, to); }

  void add_two_way(std::size_t a, std::size_t b)
  {
    add_edge(a, b);
    add_edge(b, a);
  }

  std::vector<std::size_t> successors(std::size_t node) const
  {
    std::vector<std::size_t> out;
    for (const auto & [from, to] : edges) {
      if (from == node) { out.push_back(to); }
    }
    return out;
  }

  void validate() const
  {
    for (const auto & [from, to] : edges) {
      if (from >= nodes.size() || to >= nodes.size()) { throw std::invalid_argument("PathGraph: edge references unknown node"); }
      if (!((nodes[to] - nodes[from]).norm() > 0.0)) { throw std::invalid_argument("PathGraph: zero-length edge"); }
    }
  }
};

struct PedestrianState
{
  double px{0.0};
  double py{0.0};
  double speed{0.0};
  double heading{0.0};
};

struct PredictorConfig
{
  double nominal_speed{1.4};  ///< [m/s]
  double heading_gain{4.0};   ///< heading regulator [1/s]
  double lateral_gain{0.5};   ///< cross-track to heading correction [1/m]
  double speed_gain{1.0};     ///< speed regulator [1/s]
  /// Process noise on (acceleration, heading rate).
  Eigen::Matrix2d process_noise{Eigen::Vector2d(0.5 * 0.5, 0.3 * 0.3).asDiagonal()};
  /// Initial covariance of (px, py, speed, heading).
  Eigen::Matrix4d initial_covariance{Eigen::Vector4d(0.3 * 0.3, 0.3 * 0.3, 0.0, 0.0).asDiagonal()};
  double confidence_scale{2.0};  ///< ellipse semi-axes = scale * standard deviation
  int horizon{100};
  double dt{0.05};
  double gating_radius{5.0};  ///< max measurement-to-edge distance [m]
  double reach_margin{5.0};   ///< extra route length beyond speed * horizon [m]

  void validate() const
  {
    if (!(heading_gain > 0.0) || !(lateral_gain > 0.0) || !(speed_gain > 0.0)) {
      throw std::invalid_argument("PredictorConfig: gains must be positive");
    }
    if (!(confidence_scale > 0.0) || horizon < 1 || !(dt > 0.0) || !(gating_radius >= 0.0)) {
      throw std::invalid_argument("PredictorConfig: need confidence_scale > 0, horizon >= 1, dt > 0");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(process_noise);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es0(initial_covariance);
    if (es.eigenvalues().minCoeff() < -1e-12 || es0.eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument("PredictorConfig: covariances must be positive semi-definite");
    }
  }
};

/// One walkable route hypothesis. The polyline starts at the tail of the matched edge.
struct PedestrianRoute
{
  std::vector<std::size_t> nodes;
  std::vector<Eigen::Vector2d> polyline;
  double weight{1.0};
};

struct PredictedStage
{
  double x{0.0};
  double y{0.0};
  double lambda_a{0.0};  ///< major semi-axis [m]
  double lambda_b{0.0};  ///< minor semi-axis [m]
  double alpha{0.0};     ///< major-axis orientation [rad]
  Eigen::Matrix4d covariance{Eigen::Matrix4d::Zero()};
};

struct PedestrianPrediction
{
  std::size_t pedestrian{0};
  std::size_t hypothesis{0};
  double weight{1.0};
  std::vector<PredictedStage> stages;  ///< k = 0..N
};

struct PredictionBatch
{
  std::vector<PedestrianPrediction> predictions;
  std::vector<std::size_t> unmatched;  ///< indices of measurements with no edge within the gate
};

namespace detail {

struct PolylinePoint
{
  Eigen::Vector2d point;
  double tangent{0.0};
  double lateral{0.0};  ///< signed, left of travel positive
  Eigen::Vector2d normal;
  double distance{0.0};
};

/// Closest point on a polyline whose first and last segments extend to rays.
inline PolylinePoint project_on_route(std::span<const Eigen::Vector2d> line, const Eigen::Vector2d & q)
{
  PolylinePoint best;
  best.distance = std::numeric_limits<double>::infinity();
  const std::size_t nseg = line.size() - 1;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Eigen::Vector2d d = line[i + 1] - line[i];
    double t = (q - line[i]).dot(d) / d.squaredNorm();
    if (i > 0) { t = std::max(t, 0.0); }
    if (i + 1 < nseg) { t = std::min(t, 1.0); }
    const Eigen::Vector2d foot = line[i] + t * d;
    const double dist = (q - foot).norm();
    if (dist < best.distance - 1e-12) {
      best.distance = dist;
      best.point = foot;
      best.tangent = std::atan2(d.y(), d.x());
      best.normal = Eigen::Vector2d(-d.y(), d.x()).normalized();
      best.lateral = (q - foot).dot(best.normal);
    }
  }
  return best;
}

inline double distance_to_segment(const Eigen::Vector2d & a, const Eigen::Vector2d & b, const Eigen::Vector2d & q, Eigen::Vector2d & foot)
{
  const Eigen::Vector2d d = b - a;
  const double t = std::clamp((q - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  foot = a + t * d;
  return (q - foot).norm();
}

inline void covariance_ellipse(const Eigen::Matrix2d & P, double scale, PredictedStage & out)
{
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (P + P.transpose()));
  const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);  // ascending
  const Eigen::Vector2d major = es.eigenvectors().col(1);
  out.lambda_a = scale * std::sqrt(ev[1]);
  out.lambda_b = scale * std::sqrt(ev[0]);
  out.alpha = std::atan2(major.y(), major.x());
}

}  // namespace detail

/**
 * @brief Attaches a measurement to the graph and enumerates route hypotheses.
 *
 * Returns an empty list when no edge lies within cfg.gating_radius. Weights split
 * equally at every branch point, so they sum to one per measurement.
 */
inline std::vector<PedestrianRoute> assign_references(
  const PedestrianState & meas, const PathGraph & graph, const PredictorConfig & cfg)
{
  if (graph.edges.empty()) { return {}; }
  const Eigen::Vector2d q(meas.px, meas.py);
  const Eigen::Vector2d walk_dir(std::cos(meas.heading), std::sin(meas.heading));

  std::size_t best = graph.edges.size();
  double best_dist = std::numeric_limits<double>::infinity();
  double best_align = -std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_foot = q;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [from, to] = graph.edges[e];
    Eigen::Vector2d foot;
    const double dist = detail::distance_to_segment(graph.nodes[from], graph.nodes[to], q, foot);
    const double align = (graph.nodes[to] - graph.nodes[from]).normalized().dot(walk_dir);
    // Two-way sidewalks appear twice; prefer the direction the pedestrian is walking.
    const bool tie = std::abs(dist - best_dist) <= 1e-9;
    if ((!tie && dist < best_dist) || (tie && align > best_align + 1e-12)) {
      best = e;
      best_dist = dist;
      best_align = align;
      best_foot = foot;
    }
  }
  if (best == graph.edges.size() || best_dist > cfg.gating_radius) { return {}; }

  const double reach = std::max(meas.speed, cfg.nominal_speed) * cfg.horizon * cfg.dt + cfg.reach_margin;
  const auto [tail, head] = graph.edges[best];

  std::vector<PedestrianRoute> routes;
  PedestrianRoute seed;
  seed.nodes = {tail, head};
  seed.polyline = {graph.nodes[tail], graph.nodes[head]};
  seed.weight = 1.0;

  // depth-first over simple routes; explicit stack keeps enumeration order stable
  struct Frame
  {
    PedestrianRoute route;
    double length;
  };
  std::vector<Frame> stack;
  stack.push_back({seed, (graph.nodes[head] - best_foot).norm()});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const std::size_t last = f.route.nodes.back();
    std::vector<std::size_t> next;
    if (f.length < reach) {
      for (const std::size_t s : graph.successors(last)) {
        if (std::find(f.route.nodes.begin(), f.route.nodes.end(), s) == f.route.nodes.end()) { next.push_back(s); }
      }
    }
    if (next.empty()) {
      routes.push_back(std::move(f.route));
      continue;
    }
    const double w = f.route.weight / static_cast<double>(next.size());
    for (auto it = next.rbegin(); it != next.rend(); ++it) {
      Frame child{f.route, f.length + (graph.nodes[*it] - graph.nodes[last]).norm()};
      child.route.nodes.push_back(*it);
      child.route.polyline.push_back(graph.nodes[*it]);
      child.route.weight = w;
      stack.push_back(std::move(child));
    }
  }
  return routes;
}

/// Closed-loop rollout of one hypothesis with covariance propagation.
inline PedestrianPrediction propagate(
  const PedestrianState & meas, const PedestrianRoute & route, const PredictorConfig & cfg)
{
  if (route.polyline.size() < 2) { throw std::invalid_argument("propagate: route needs at least two points"); }
  const double dt = cfg.dt;
  Eigen::Matrix<double, 4, 2> G = Eigen::Matrix<double, 4, 2>::Zero();
  G(2, 0) = dt;
  G(3, 1) = dt;
  const Eigen::Matrix4d W = G * cfg.process_noise * G.transpose();

  PedestrianPrediction out;
  out.weight = route.weight;
  out.stages.resize(static_cast<std::size_t>(cfg.horizon) + 1);

  Eigen::Vector2d p(meas.px, meas.py);
  double v = meas.speed;
  double psi = meas.heading;
  Eigen::Matrix4d P = cfg.initial_covariance;

  for (int k = 0; k <= cfg.horizon; ++k) {
    PredictedStage & st = out.stages[static_cast<std::size_t>(k)];
    st.x = p.x();
    st.y = p.y();
    st.covariance = P;
    detail::covariance_ellipse(P.topLeftCorner<2, 2>(), cfg.confidence_scale, st);
    if (k == cfg.horizon) { break; }

    const detail::PolylinePoint pp = detail::project_on_route(route.polyline, p);
    const double le = cfg.lateral_gain * pp.lateral;
    const double psi_des = pp.tangent - std::atan(le);
    const double heading_err = wrap_angle(psi_des - psi);
    const Eigen::Vector2d dpsi_des_dp = -cfg.lateral_gain / (1.0 + le * le) * pp.normal;

    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 2) = dt * std::cos(psi);
    F(0, 3) = -dt * v * std::sin(psi);
    F(1, 2) = dt * std::sin(psi);
    F(1, 3) = dt * v * std::cos(psi);
    F(2, 2) = 1.0 - dt * cfg.speed_gain;
    F(3, 0) = dt * cfg.heading_gain * dpsi_des_dp.x();
    F(3, 1) = dt * cfg.heading_gain * dpsi_des_dp.y();
    F(3, 3) = 1.0 - dt * cfg.heading_gain;

    p += dt * v * Eigen::Vector2d(std::cos(psi), std::sin(psi));
    v += dt * cfg.speed_gain * (cfg.nominal_speed - v);
    psi += dt * cfg.heading_gain * heading_err;
    P = F * P * F.transpose() + W;
    P = 0.5 * (P + P.transpose()).eval();
  }
  return out;
}

/// All hypotheses of all measurements, ordered by (pedestrian index, route order).
inline PredictionBatch predict_all(
  std::span<const PedestrianState> measurements, const PathGraph & graph, const PredictorConfig & cfg)
{
  PredictionBatch batch;
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    const auto routes = assign_references(measurements[i], graph, cfg);
    if (routes.empty()) {
      batch.unmatched.push_back(i);
      continue;
    }
    for (std::size_t h = 0; h < routes.size(); ++h) {
      PedestrianPrediction pred = propagate(measurements[i], routes[h], cfg);
      pred.pedestrian = i;
      pred.hypothesis = h;
      batch.predictions.push_back(std::move(pred));
    }
  }
  return batch;
}

}  // namespace urbanmpc

#endif  // URBANMPC__PEDESTRIAN_PREDICTION_HPP_
