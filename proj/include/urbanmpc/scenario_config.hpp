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

#ifndef URBANMPC__SCENARIO_CONFIG_HPP_
#define URBANMPC__SCENARIO_CONFIG_HPP_

/**
 * @file
 * @brief Scenario description and its JSON form.
 *
 * Parsing is strict: unknown keys anywhere in the document raise ConfigError.
 * Every key is optional except `route`; omitted keys keep their defaults.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmpc/ocp_builder.hpp"
#include "urbanmpc/pedestrian_prediction.hpp"
#include "urbanmpc/qp_solver.hpp"

namespace urbanmpc {

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A pedestrian in the scene. A non-empty `recording` replaces the scripted walk.
struct PedestrianSource
{
  std::string name;
  std::vector<std::size_t> route;  ///< graph node ids walked at constant speed
  double speed{1.4};
  double start_time{0.0};  ///< stands at the first node until then [s]
  std::string recording;   ///< CSV "t,px,py", relative to the config file
};

struct PlantNoise
{
  bool enabled{false};
  double position_std{0.02};  ///< [m]
  double speed_std{0.02};     ///< [m/s]
  double heading_std{0.002};  ///< [rad]
};

struct ScenarioConfig
{
  std::string name{"scenario"};
  double duration{10.0};
  std::uint64_t seed{0};
  std::vector<RouteWaypoint> route;
  VehicleState initial_state{};
  ControllerConfig controller{};
  SolverSettings solver{};
  PredictorConfig predictor{};
  PathGraph graph{};
  std::vector<PedestrianSource> pedestrians;
  double plant_tolerance{1e-10};
  PlantNoise noise{};
  int plan_stride{5};  ///< plan snapshots every n cycles

  std::filesystem::path base_dir;  ///< directory of the config file; not serialized

  void validate() const
  {
    if (!(duration > 0.0) || !std::isfinite(duration)) { throw ConfigError("duration must be > 0"); }
    if (route.size() < 2) { throw ConfigError("route needs at least two waypoints"); }
    if (plan_stride < 1) { throw ConfigError("logging.plan_stride must be >= 1"); }
    if (!(plant_tolerance > 0.0)) { throw ConfigError("plant.tolerance must be > 0"); }
    try {
      controller.validate();
      predictor.validate();
      graph.validate();
      ReferenceCurve check(route);
      (void)check;
    } catch (const std::invalid_argument & e) {
      throw ConfigError(e.what());
    }
    for (const PedestrianSource & p : pedestrians) {
      if (p.recording.empty()) {
        if (p.route.size() < 2) { throw ConfigError("pedestrian '" + p.name + "': route needs two nodes or a recording"); }
        for (const std::size_t n : p.route) {
          if (n >= graph.nodes.size()) { throw ConfigError("pedestrian '" + p.name + "': unknown node id"); }
        }
        if (!(p.speed >= 0.0)) { throw ConfigError("pedestrian '" + p.name + "': speed must be >= 0"); }
      }
    }
  }
};

namespace detail {

inline void check_keys(const nlohmann::json & j, const std::string & where, std::initializer_list<const char *> allowed)
{
  if (!j.is_object()) { throw ConfigError(where + ": expected an object"); }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto & item : j.items()) {
    if (ok.count(item.key()) == 0) { throw ConfigError("unknown key '" + item.key() + "' in " + where); }
  }
}

template <typename T>
void read(const nlohmann::json & j, const char * key, T & out, const std::string & where)
{
  if (!j.contains(key)) { return; }
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception & e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd & m)
{
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) { r.push_back(m(i, c)); }
    rows.push_back(r);
  }
  return rows;
}

template <int R, int C>
void read_matrix(const nlohmann::json & j, const char * key, Eigen::Matrix<double, R, C> & out, const std::string & where)
{
  if (!j.contains(key)) { return; }
  std::vector<std::vector<double>> rows;
  read(j, key, rows, where);
  if (rows.size() != static_cast<std::size_t>(R)) { throw ConfigError(where + "." + key + ": wrong row count"); }
  for (int i = 0; i < R; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(C)) {
      throw ConfigError(where + "." + key + ": wrong column count");
    }
    for (int c = 0; c < C; ++c) { out(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]; }
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig & c)
{
  using nlohmann::json;
  json j;
  j["name"] = c.name;
  j["duration"] = c.duration;
  j["seed"] = c.seed;
  j["route"] = json::array();
  for (const RouteWaypoint & w : c.route) { j["route"].push_back({{"x", w.x}, {"y", w.y}, {"speed", w.speed}}); }
  const VehicleState & s = c.initial_state;
  j["initial_state"] = {{"x", s.x}, {"y", s.y}, {"v", s.v}, {"theta", s.theta}, {"delta", s.delta}, {"omega", s.omega}};

  const ControllerConfig & k = c.controller;
  j["controller"] = {
    {"horizon", k.horizon},
    {"q_bar", k.q_bar},
    {"r_bar", k.r_bar},
    {"v_min", k.v_min},
    {"v_max", k.v_max},
    {"delta_max", k.delta_max},
    {"omega_max", k.omega_max},
    {"a_min", k.a_min},
    {"a_max", k.a_max},
    {"delta_sp_max", k.delta_sp_max},
    {"lateral_bound", k.lateral_bound},
    {"road_slack_weight", k.road_slack_weight},
    {"pedestrian_slack_weight", k.pedestrian_slack_weight},
    {"speed_steering_limit", k.speed_steering_limit},
    {"steering_limit_upper", {k.a1, k.b1, k.c1}},
    {"steering_limit_lower", {k.a2, k.b2, k.c2}},
    {"ego_semi_axes", {k.ego_semi_major, k.ego_semi_minor}},
    {"activation_radius", k.activation_radius},
    {"delay", k.delay},
    {"wheelbase", k.vehicle.l_w},
    {"w0", k.vehicle.w0},
    {"zeta", k.vehicle.zeta},
    {"dt", k.vehicle.dt},
    {"rk4_steps", k.vehicle.n_rk4_steps},
  };
  j["solver"] = {{"tol", c.solver.tol},
                 {"max_iter", c.solver.max_iter},
                 {"mehrotra", c.solver.mehrotra},
                 {"sigma", c.solver.sigma}};
  const PredictorConfig & p = c.predictor;
  j["predictor"] = {
    {"nominal_speed", p.nominal_speed},
    {"heading_gain", p.heading_gain},
    {"lateral_gain", p.lateral_gain},
    {"speed_gain", p.speed_gain},
    {"process_noise", detail::matrix_to_json(p.process_noise)},
    {"initial_covariance", detail::matrix_to_json(p.initial_covariance)},
    {"confidence_scale", p.confidence_scale},
    {"gating_radius", p.gating_radius},
    {"reach_margin", p.reach_margin},
  };
  json nodes = json::array(), edges = json::array();
  for (const auto & n : c.graph.nodes) { nodes.push_back({n.x(), n.y()}); }
  for (const auto & [a, b] : c.graph.edges) { edges.push_back({a, b}); }
  j["path_graph"] = {{"nodes", nodes}, {"edges", edges}};
  j["pedestrians"] = json::array();
  for (const PedestrianSource & ps : c.pedestrians) {
    json e = {{"name", ps.name}, {"route", ps.route}, {"speed", ps.speed}, {"start_time", ps.start_time}};
    if (!ps.recording.empty()) { e["recording"] = ps.recording; }
    j["pedestrians"].push_back(e);
  }
  j["plant"] = {{"tolerance", c.plant_tolerance},
                {"noise",
                 {{"enabled", c.noise.enabled},
                  {"position_std", c.noise.position_std},
                  {"speed_std", c.noise.speed_std},
                  {"heading_std", c.noise.heading_std}}}};
  j["logging"] = {{"plan_stride", c.plan_stride}};
  return j;
}

inline ScenarioConfig parse_scenario(const nlohmann::json & j, const std::filesystem::path & base_dir = {})
{
  using detail::check_keys;
  using detail::read;
  ScenarioConfig c;
  c.base_dir = base_dir;
  check_keys(j, "scenario",
             {"name", "duration", "seed", "route", "initial_state", "controller", "solver", "predictor", "path_graph",
              "pedestrians", "plant", "logging"});
  read(j, "name", c.name, "scenario");
  read(j, "duration", c.duration, "scenario");
  read(j, "seed", c.seed, "scenario");

  if (!j.contains("route") || !j.at("route").is_array()) { throw ConfigError("scenario.route: required array"); }
  for (const auto & w : j.at("route")) {
    check_keys(w, "route[]", {"x", "y", "speed"});
    RouteWaypoint rw;
    read(w, "x", rw.x, "route[]");
    read(w, "y", rw.y, "route[]");
    read(w, "speed", rw.speed, "route[]");
    c.route.push_back(rw);
  }

  if (j.contains("initial_state")) {
    const auto & s = j.at("initial_state");
    check_keys(s, "initial_state", {"x", "y", "v", "theta", "delta", "omega"});
    read(s, "x", c.initial_state.x, "initial_state");
    read(s, "y", c.initial_state.y, "initial_state");
    read(s, "v", c.initial_state.v, "initial_state");
    read(s, "theta", c.initial_state.theta, "initial_state");
    read(s, "delta", c.initial_state.delta, "initial_state");
    read(s, "omega", c.initial_state.omega, "initial_state");
  }

  if (j.contains("controller")) {
    const auto & k = j.at("controller");
    const std::string w = "controller";
    ControllerConfig & cc = c.controller;
    check_keys(k, w,
               {"horizon", "q_bar", "r_bar", "v_min", "v_max", "delta_max", "omega_max", "a_min", "a_max",
                "delta_sp_max", "lateral_bound", "road_slack_weight", "pedestrian_slack_weight",
                "speed_steering_limit", "steering_limit_upper", "steering_limit_lower", "ego_semi_axes",
                "activation_radius", "delay", "wheelbase", "w0", "zeta", "dt", "rk4_steps"});
    read(k, "horizon", cc.horizon, w);
    read(k, "q_bar", cc.q_bar, w);
    read(k, "r_bar", cc.r_bar, w);
    read(k, "v_min", cc.v_min, w);
    read(k, "v_max", cc.v_max, w);
    read(k, "delta_max", cc.delta_max, w);
    read(k, "omega_max", cc.omega_max, w);
    read(k, "a_min", cc.a_min, w);
    read(k, "a_max", cc.a_max, w);
    read(k, "delta_sp_max", cc.delta_sp_max, w);
    read(k, "lateral_bound", cc.lateral_bound, w);
    read(k, "road_slack_weight", cc.road_slack_weight, w);
    read(k, "pedestrian_slack_weight", cc.pedestrian_slack_weight, w);
    read(k, "speed_steering_limit", cc.speed_steering_limit, w);
    std::array<double, 3> up{cc.a1, cc.b1, cc.c1}, lo{cc.a2, cc.b2, cc.c2};
    read(k, "steering_limit_upper", up, w);
    read(k, "steering_limit_lower", lo, w);
    cc.a1 = up[0], cc.b1 = up[1], cc.c1 = up[2];
    cc.a2 = lo[0], cc.b2 = lo[1], cc.c2 = lo[2];
    std::array<double, 2> axes{cc.ego_semi_major, cc.ego_semi_minor};
    read(k, "ego_semi_axes", axes, w);
    cc.ego_semi_major = axes[0];
    cc.ego_semi_minor = axes[1];
    read(k, "activation_radius", cc.activation_radius, w);
    read(k, "delay", cc.delay, w);
    read(k, "wheelbase", cc.vehicle.l_w, w);
    read(k, "w0", cc.vehicle.w0, w);
    read(k, "zeta", cc.vehicle.zeta, w);
    read(k, "dt", cc.vehicle.dt, w);
    read(k, "rk4_steps", cc.vehicle.n_rk4_steps, w);
  }

  if (j.contains("solver")) {
    const auto & s = j.at("solver");
    check_keys(s, "solver", {"tol", "max_iter", "mehrotra", "sigma"});
    read(s, "tol", c.solver.tol, "solver");
    read(s, "max_iter", c.solver.max_iter, "solver");
    read(s, "mehrotra", c.solver.mehrotra, "solver");
    read(s, "sigma", c.solver.sigma, "solver");
  }

  if (j.contains("predictor")) {
    const auto & p = j.at("predictor");
    const std::string w = "predictor";
    PredictorConfig & pc = c.predictor;
    check_keys(p, w,
               {"nominal_speed", "heading_gain", "lateral_gain", "speed_gain", "process_noise", "initial_covariance",
                "confidence_scale", "gating_radius", "reach_margin"});
    read(p, "nominal_speed", pc.nominal_speed, w);
    read(p, "heading_gain", pc.heading_gain, w);
    read(p, "lateral_gain", pc.lateral_gain, w);
    read(p, "speed_gain", pc.speed_gain, w);
    detail::read_matrix(p, "process_noise", pc.process_noise, w);
    detail::read_matrix(p, "initial_covariance", pc.initial_covariance, w);
    read(p, "confidence_scale", pc.confidence_scale, w);
    read(p, "gating_radius", pc.gating_radius, w);
    read(p, "reach_margin", pc.reach_margin, w);
  }
  c.predictor.horizon = c.controller.horizon;
  c.predictor.dt = c.controller.vehicle.dt;

  if (j.contains("path_graph")) {
    const auto & g = j.at("path_graph");
    check_keys(g, "path_graph", {"nodes", "edges", "two_way_edges"});
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<std::size_t, 2>> edges, two_way;
    read(g, "nodes", nodes, "path_graph");
    read(g, "edges", edges, "path_graph");
    read(g, "two_way_edges", two_way, "path_graph");
    for (const auto & n : nodes) { c.graph.add_node(n[0], n[1]); }
    for (const auto & e : edges) { c.graph.add_edge(e[0], e[1]); }
    for (const auto & e : two_way) { c.graph.add_two_way(e[0], e[1]); }
  }

  if (j.contains("pedestrians")) {
    if (!j.at("pedestrians").is_array()) { throw ConfigError("pedestrians: expected an array"); }
    for (const auto & p : j.at("pedestrians")) {
      check_keys(p, "pedestrians[]", {"name", "route", "speed", "start_time", "recording"});
      PedestrianSource ps;
      ps.name = "ped" + std::to_string(c.pedestrians.size());
      read(p, "name", ps.name, "pedestrians[]");
      read(p, "route", ps.route, "pedestrians[]");
      read(p, "speed", ps.speed, "pedestrians[]");
      read(p, "start_time", ps.start_time, "pedestrians[]");
      read(p, "recording", ps.recording, "pedestrians[]");
      c.pedestrians.push_back(ps);
    }
  }

  if (j.contains("plant")) {
    const auto & p = j.at("plant");
    check_keys(p, "plant", {"tolerance", "noise"});
    read(p, "tolerance", c.plant_tolerance, "plant");
    if (p.contains("noise")) {
      const auto & n = p.at("noise");
      check_keys(n, "plant.noise", {"enabled", "position_std", "speed_std", "heading_std"});
      read(n, "enabled", c.noise.enabled, "plant.noise");
      read(n, "position_std", c.noise.position_std, "plant.noise");
      read(n, "speed_std", c.noise.speed_std, "plant.noise");
      read(n, "heading_std", c.noise.heading_std, "plant.noise");
    }
  }
  if (j.contains("logging")) {
    const auto & l = j.at("logging");
    check_keys(l, "logging", {"plan_stride"});
    read(l, "plan_stride", c.plan_stride, "logging");
  }

  c.validate();
  return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot open config file: " + path.string()); }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error & e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

}  // namespace urbanmpc

#endif  // URBANMPC__SCENARIO_CONFIG_HPP_
