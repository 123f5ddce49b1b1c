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

#ifndef URBANMPC__SIMULATION_HPP_
#define URBANMPC__SIMULATION_HPP_

/**
 * @file
 * @brief Closed-loop simulation: pedestrians, predictor, controller and plant.
 *
 * Per cycle k (t = k dt): read pedestrian truth, predict, run one controller
 * step, push the steering command through the delay line, integrate the plant
 * over dt with the error-controlled integrator. Wall-clock timings are kept out
 * of the main log so equal seeds give byte-identical logs.
 */

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmpc/adaptive_integrator.hpp"
#include "urbanmpc/pedestrian_sources.hpp"
#include "urbanmpc/rti_controller.hpp"
#include "urbanmpc/scenario_config.hpp"

namespace urbanmpc {

struct SimStep
{
  double t{0.0};
  VehicleState state{};  ///< at t, before the command acts
  ControlCommand command{};
  double applied_setpoint{0.0};  ///< steering setpoint driving the actuator over [t, t + dt)
  double sigma{0.0};
  double lateral_error{0.0};
  int halfplanes{0};
  int active_halfplanes{0};
  double min_gap{kInf};             ///< min over pedestrians of center distance - d_ego - d_ped [m]
  double min_center_distance{kInf};  ///< [m]
  std::vector<Eigen::Vector2d> pedestrians;
};

struct SimSummary
{
  std::size_t steps{0};
  double min_gap{kInf};
  double min_center_distance{kInf};
  double max_abs_accel{0.0};
  double max_abs_omega{0.0};
  double max_abs_lateral_error{0.0};
  double min_speed{kInf};
  double final_sigma{0.0};
  double route_length{0.0};
  int fallbacks{0};
  std::map<std::string, int> status_counts;
  double time_mean{0.0}, time_std{0.0}, time_max{0.0};
  double prep_mean{0.0}, solve_mean{0.0};
};

struct SimResult
{
  std::vector<SimStep> steps;
  std::vector<nlohmann::json> plans;  ///< snapshots every plan_stride cycles
  std::vector<std::string> pedestrian_names;
  SimSummary summary;
  double pedestrian_radius{0.0};
};

/// Radius used for true pedestrians: the confidence-scaled initial position spread.
inline double pedestrian_radius(const PredictorConfig & p)
{
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(p.initial_covariance.topLeftCorner<2, 2>());
  return p.confidence_scale * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Center-to-center distance minus the vehicle and pedestrian support radii along the joining line.
inline double footprint_gap(const VehicleState & s, const Eigen::Vector2d & ped, const ControllerConfig & cfg,
                            double ped_radius, double * center_distance = nullptr)
{
  const Eigen::Vector2d c =
    Eigen::Vector2d(s.x, s.y) + 0.5 * cfg.vehicle.l_w * Eigen::Vector2d(std::cos(s.theta), std::sin(s.theta));
  const Eigen::Vector2d d = ped - c;
  const double dist = d.norm();
  if (center_distance != nullptr) { *center_distance = dist; }
  const double bearing = std::atan2(d.y(), d.x());
  return dist - support_radius(cfg.ego_semi_major, cfg.ego_semi_minor, bearing - s.theta) - ped_radius;
}

namespace detail {

inline double round4(double v) { return std::round(v * 1e4) / 1e4; }

inline nlohmann::json plan_snapshot(double t, const RtiController & ctl, std::span<const PedestrianPrediction> preds,
                                    const ReferenceCurve & curve)
{
  using nlohmann::json;
  json j;
  j["t"] = round4(t);
  json plan = json::array();
  for (const auto & x : ctl.last_solution().x) {
    plan.push_back({round4(x[kX]), round4(x[kY]), round4(x[kV]), round4(x[kTheta])});
  }
  j["plan"] = plan;
  json ref = json::array(), left = json::array(), right = json::array();
  const double ld = ctl.config().lateral_bound;
  for (const ReferencePoint & r : ctl.last_references()) {
    ref.push_back({round4(r.x), round4(r.y)});
    const Eigen::Vector2d l = curve.offset_point(r.sigma, ld), rr = curve.offset_point(r.sigma, -ld);
    left.push_back({round4(l.x()), round4(l.y())});
    right.push_back({round4(rr.x()), round4(rr.y())});
  }
  j["reference"] = ref;
  j["road_left"] = left;
  j["road_right"] = right;
  json pj = json::array();
  for (const PedestrianPrediction & p : preds) {
    json st = json::array();
    for (const PredictedStage & s : p.stages) {
      st.push_back({round4(s.x), round4(s.y), round4(s.lambda_a), round4(s.lambda_b), round4(s.alpha)});
    }
    pj.push_back({{"pedestrian", p.pedestrian}, {"hypothesis", p.hypothesis}, {"weight", p.weight}, {"stages", st}});
  }
  j["predictions"] = pj;
  j["halfplanes"] = ctl.last_halfplanes().size();
  return j;
}

inline int count_active(const RtiController & ctl, const OcpSolution & sol)
{
  int n = 0;
  if (sol.x.empty()) { return 0; }
  for (const ObstacleHalfplane & h : ctl.last_halfplanes()) {
    const Eigen::Vector2d p = sol.x[static_cast<std::size_t>(h.stage)].head<2>();
    if (h.normal.dot(p) - h.normal.dot(h.lb) <= 1e-6) { ++n; }
  }
  return n;
}

}  // namespace detail

/// Runs the closed loop for cfg.duration. Controller fallbacks are logged, never fatal.
inline SimResult run(const ScenarioConfig & cfg)
{
  cfg.validate();
  const double dt = cfg.controller.vehicle.dt;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / dt));
  const ReferenceCurve curve(cfg.route);

  std::vector<PedestrianAgent> agents;
  SimResult res;
  for (const PedestrianSource & p : cfg.pedestrians) {
    agents.emplace_back(p, cfg.graph, cfg.base_dir, dt);
    res.pedestrian_names.push_back(p.name);
  }
  res.pedestrian_radius = pedestrian_radius(cfg.predictor);

  RtiController ctl(cfg.controller, cfg.solver);
  ctl.initialize(cfg.initial_state, curve);

  const int nd = cfg.controller.delay_steps();
  std::deque<double> line(static_cast<std::size_t>(nd), cfg.initial_state.delta);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  VehicleState s = cfg.initial_state;
  std::vector<double> totals;
  double prep_sum = 0.0, solve_sum = 0.0;
  res.steps.reserve(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    SimStep row;
    row.t = static_cast<double>(k) * dt;
    row.state = s;

    std::vector<PedestrianState> meas;
    for (const PedestrianAgent & a : agents) {
      const PedestrianState ps = a.state(k);
      meas.push_back(ps);
      row.pedestrians.emplace_back(ps.px, ps.py);
      double center = 0.0;
      const double gap = footprint_gap(s, Eigen::Vector2d(ps.px, ps.py), cfg.controller, res.pedestrian_radius, &center);
      row.min_gap = std::min(row.min_gap, gap);
      row.min_center_distance = std::min(row.min_center_distance, center);
    }
    const PredictionBatch batch = predict_all(meas, cfg.graph, cfg.predictor);

    row.command = ctl.step(s, batch.predictions, curve);
    row.halfplanes = static_cast<int>(ctl.last_halfplanes().size());
    row.active_halfplanes = detail::count_active(ctl, ctl.last_solution());

    const Projection pr = curve.project(Eigen::Vector2d(s.x, s.y), s.theta);
    row.sigma = pr.sigma;
    row.lateral_error = pr.error.e_y;

    if (k % static_cast<std::size_t>(cfg.plan_stride) == 0) {
      res.plans.push_back(detail::plan_snapshot(row.t, ctl, batch.predictions, curve));
    }

    double sp = row.command.delta_sp;
    if (nd > 0) {
      line.push_back(row.command.delta_sp);
      sp = line.front();
      line.pop_front();
    }
    row.applied_setpoint = sp;

    StateVector next = integrate_adaptive(s.vector(), InputVector(row.command.a, sp), cfg.controller.vehicle, dt,
                                          cfg.plant_tolerance);
    if (cfg.noise.enabled) {
      next[kX] += cfg.noise.position_std * gauss(rng);
      next[kY] += cfg.noise.position_std * gauss(rng);
      next[kV] += cfg.noise.speed_std * gauss(rng);
      next[kTheta] += cfg.noise.heading_std * gauss(rng);
    }
    s = VehicleState::from_vector(next);

    totals.push_back(row.command.total_time());
    prep_sum += row.command.prep_time;
    solve_sum += row.command.solve_time;
    res.steps.push_back(std::move(row));
  }

  SimSummary & sm = res.summary;
  sm.steps = res.steps.size();
  sm.route_length = curve.length();
  for (const SimStep & r : res.steps) {
    sm.min_gap = std::min(sm.min_gap, r.min_gap);
    sm.min_center_distance = std::min(sm.min_center_distance, r.min_center_distance);
    sm.max_abs_accel = std::max(sm.max_abs_accel, std::abs(r.command.a));
    sm.max_abs_omega = std::max(sm.max_abs_omega, std::abs(r.state.omega));
    sm.max_abs_lateral_error = std::max(sm.max_abs_lateral_error, std::abs(r.lateral_error));
    sm.min_speed = std::min(sm.min_speed, r.state.v);
    sm.fallbacks += r.command.fallback ? 1 : 0;
    ++sm.status_counts[to_string(r.command.status)];
  }
  sm.final_sigma = curve.project(Eigen::Vector2d(s.x, s.y), s.theta).sigma;
  if (!totals.empty()) {
    const double n = static_cast<double>(totals.size());
    double sum = 0.0, sq = 0.0;
    for (const double t : totals) {
      sum += t;
      sq += t * t;
      sm.time_max = std::max(sm.time_max, t);
    }
    sm.time_mean = sum / n;
    sm.time_std = std::sqrt(std::max(0.0, sq / n - sm.time_mean * sm.time_mean));
    sm.prep_mean = prep_sum / n;
    sm.solve_mean = solve_sum / n;
  }
  return res;
}

namespace detail {

inline void put(std::ostream & os, double v)
{
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, r.ptr - buf);
}

}  // namespace detail

/**
 * @brief Main log: one row per cycle, shortest round-trip number formatting.
 *
 * Columns: t,x,y,v,theta,delta,omega,a_cmd,delta_sp_cmd,delta_sp_applied,status,
 * iterations,fallback,sigma,lateral_error,halfplanes,active_halfplanes,min_gap,
 * min_center_distance, then <name>_x,<name>_y per pedestrian.
 */
inline void write_log_csv(std::ostream & os, const SimResult & r)
{
  os << "t,x,y,v,theta,delta,omega,a_cmd,delta_sp_cmd,delta_sp_applied,status,iterations,fallback,sigma,"
        "lateral_error,halfplanes,active_halfplanes,min_gap,min_center_distance";
  for (const std::string & n : r.pedestrian_names) { os << ',' << n << "_x," << n << "_y"; }
  os << '\n';
  for (const SimStep & s : r.steps) {
    const double vals[] = {s.t, s.state.x, s.state.y, s.state.v, s.state.theta, s.state.delta, s.state.omega,
                           s.command.a, s.command.delta_sp, s.applied_setpoint};
    for (std::size_t i = 0; i < std::size(vals); ++i) {
      if (i > 0) { os << ','; }
      detail::put(os, vals[i]);
    }
    os << ',' << to_string(s.command.status) << ',' << s.command.iterations << ',' << (s.command.fallback ? 1 : 0);
    os << ',';
    detail::put(os, s.sigma);
    os << ',';
    detail::put(os, s.lateral_error);
    os << ',' << s.halfplanes << ',' << s.active_halfplanes << ',';
    if (std::isfinite(s.min_gap)) { detail::put(os, s.min_gap); }
    os << ',';
    if (std::isfinite(s.min_center_distance)) { detail::put(os, s.min_center_distance); }
    for (const Eigen::Vector2d & p : s.pedestrians) {
      os << ',';
      detail::put(os, p.x());
      os << ',';
      detail::put(os, p.y());
    }
    os << '\n';
  }
}

/// Wall-clock timings per cycle in milliseconds: t,prep_ms,solve_ms,total_ms,iterations.
inline void write_timing_csv(std::ostream & os, const SimResult & r)
{
  os << "t,prep_ms,solve_ms,total_ms,iterations\n";
  for (const SimStep & s : r.steps) {
    detail::put(os, s.t);
    os << ',';
    detail::put(os, s.command.prep_time * 1e3);
    os << ',';
    detail::put(os, s.command.solve_time * 1e3);
    os << ',';
    detail::put(os, s.command.total_time() * 1e3);
    os << ',' << s.command.iterations << '\n';
  }
}

inline nlohmann::json summary_json(const SimResult & r, const ScenarioConfig & cfg)
{
  const SimSummary & s = r.summary;
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {
    {"scenario", cfg.name},
    {"steps", s.steps},
    {"horizon", cfg.controller.horizon},
    {"delay_steps", cfg.controller.delay_steps()},
    {"min_gap_m", finite_or_null(s.min_gap)},
    {"min_center_distance_m", finite_or_null(s.min_center_distance)},
    {"max_abs_accel", s.max_abs_accel},
    {"max_abs_omega", s.max_abs_omega},
    {"max_abs_lateral_error", s.max_abs_lateral_error},
    {"min_speed", finite_or_null(s.min_speed)},
    {"final_sigma", s.final_sigma},
    {"route_length", s.route_length},
    {"fallbacks", s.fallbacks},
    {"status_counts", s.status_counts},
    {"cycle_time_ms", {{"mean", s.time_mean * 1e3}, {"std", s.time_std * 1e3}, {"max", s.time_max * 1e3}}},
    {"prep_time_mean_ms", s.prep_mean * 1e3},
    {"solve_time_mean_ms", s.solve_mean * 1e3},
  };
}

inline void write_plans_jsonl(std::ostream & os, const SimResult & r)
{
  for (const nlohmann::json & j : r.plans) { os << j.dump() << '\n'; }
}

}  // namespace urbanmpc

#endif  // URBANMPC__SIMULATION_HPP_
