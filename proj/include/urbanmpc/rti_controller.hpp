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

#ifndef URBANMPC__RTI_CONTROLLER_HPP_
#define URBANMPC__RTI_CONTROLLER_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "urbanmpc/ocp_builder.hpp"
#include "urbanmpc/qp_solver.hpp"

namespace urbanmpc {

struct ControlCommand
{
  double a{0.0};
  double delta_sp{0.0};
  SolveStatus status{SolveStatus::kOptimal};
  int iterations{0};
  bool fallback{false};
  double prep_time{0.0};   ///< linearization and assembly [s]
  double solve_time{0.0};  ///< QP solve [s]

  double total_time() const { return prep_time + solve_time; }
};

/**
 * @brief Moves every stage one step forward. The last state is repeated and the
 * last input held. Only the physical part of an augmented solution is kept.
 */
inline GuessTrajectory shift(const OcpSolution & sol)
{
  if (sol.x.size() < 2 || sol.u.size() + 1 != sol.x.size()) { throw std::invalid_argument("shift: malformed solution"); }
  GuessTrajectory g;
  const std::size_t n = sol.x.size();
  g.x.resize(n);
  g.u.resize(n - 1);
  for (std::size_t k = 0; k < n; ++k) { g.x[k] = sol.x[std::min(k + 1, n - 1)].head<kNx>(); }
  for (std::size_t k = 0; k + 1 < n; ++k) { g.u[k] = sol.u[std::min(k + 1, n - 2)].head<kNu>(); }
  return g;
}

inline GuessTrajectory shift(const GuessTrajectory & prev)
{
  OcpSolution s;
  s.x.assign(prev.x.begin(), prev.x.end());
  s.u.assign(prev.u.begin(), prev.u.end());
  return shift(s);
}

/// Cold start: estimate at stage 0, then points along the path at the path speed with the estimate's heading.
inline GuessTrajectory initial_guess(const VehicleState & est, const ReferenceCurve & curve, const ControllerConfig & cfg)
{
  const int N = cfg.horizon;
  const double dt = cfg.vehicle.dt;
  GuessTrajectory g;
  g.x.resize(static_cast<std::size_t>(N) + 1);
  g.u.assign(static_cast<std::size_t>(N), InputVector::Zero());
  g.x[0] = est.vector();
  double sigma = curve.project(Eigen::Vector2d(est.x, est.y), est.theta).sigma;
  for (int k = 1; k <= N; ++k) {
    sigma = advance_sigma(sigma, curve.speed(sigma), 0.0, dt, curve.length());
    const Eigen::Vector2d p = curve.position(sigma);
    StateVector s;
    s << p.x(), p.y(), std::clamp(curve.speed(sigma), cfg.v_min, cfg.v_max), est.theta, 0.0, 0.0;
    g.x[static_cast<std::size_t>(k)] = s;
  }
  return g;
}

/**
 * @brief One SQP iteration per control cycle.
 *
 * Not thread-safe; calls to step() must be serialized.
 */
class RtiController
{
public:
  explicit RtiController(ControllerConfig cfg, SolverSettings solver = {}) : cfg_(std::move(cfg)), solver_(solver)
  {
    cfg_.validate();
  }

  const ControllerConfig & config() const { return cfg_; }
  bool initialized() const { return !guess_.x.empty(); }

  /// Cold-start guess; the delay buffer is filled with the current steering angle.
  void initialize(const VehicleState & est, const ReferenceCurve & curve)
  {
    guess_ = initial_guess(est, curve, cfg_);
    buffer_.assign(static_cast<std::size_t>(cfg_.delay_steps()), est.delta);
    last_delta_sp_ = est.delta;
    last_solution_ = OcpSolution{};
  }

  /// Overwrites the pending steering setpoints (oldest first).
  void set_buffer(std::span<const double> pending)
  {
    if (pending.size() != static_cast<std::size_t>(cfg_.delay_steps())) {
      throw std::invalid_argument("set_buffer: expected " + std::to_string(cfg_.delay_steps()) + " entries");
    }
    buffer_.assign(pending.begin(), pending.end());
  }

  ControlCommand step(const VehicleState & est, std::span<const PedestrianPrediction> predictions,
                      const ReferenceCurve & curve)
  {
    if (!initialized()) { throw std::logic_error("RtiController::step before initialize"); }
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    ControlCommand cmd;

    // keep the guess headings on the same branch as the estimate
    const double turns = std::round((est.theta - guess_.x[0][kTheta]) / (2.0 * std::numbers::pi));
    if (turns != 0.0) {
      for (StateVector & s : guess_.x) { s[kTheta] += turns * 2.0 * std::numbers::pi; }
    }

    OcpQp qp;
    bool built = true;
    try {
      const std::size_t n = guess_.x.size();
      const Projection p0 = curve.project(Eigen::Vector2d(est.x, est.y), est.theta);
      std::vector<double> gv(n), gh(n);
      for (std::size_t k = 0; k < n; ++k) {
        gv[k] = guess_.x[k][kV];
        gh[k] = guess_.x[k][kTheta];
      }
      refs_ = build_references(p0.sigma, gv, gh, curve, est.delta, cfg_.vehicle.dt);
      const auto costs = build_cost(refs_, cfg_);
      const StageConstraints box = build_input_constraints(guess_, cfg_);
      const StageConstraints road = build_road_constraints(guess_, curve, cfg_);
      halfplanes_ = build_pedestrian_halfplanes(guess_, predictions, cfg_);
      const StageConstraints ped = pedestrian_rows(halfplanes_, n, cfg_);
      const std::array<const StageConstraints *, 3> sets{&box, &road, &ped};
      qp = assemble_qp(est.vector(), buffer_, guess_, refs_, costs, sets, cfg_.vehicle);
    } catch (const DomainError &) {
      built = false;
    }
    const auto t1 = clock::now();
    cmd.prep_time = std::chrono::duration<double>(t1 - t0).count();

    OcpSolution sol;
    if (built) {
      OcpSolution warm;
      const std::size_t n = guess_.x.size();
      warm.x.resize(n);
      warm.u = std::vector<Eigen::VectorXd>(guess_.u.begin(), guess_.u.end());
      warm.slack.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        warm.x[k] = augmented_state(guess_, buffer_, k);
        warm.slack[k] = Eigen::VectorXd::Zero(qp.stages[k].rows());
      }
      warm.x[0] = qp.x0;
      sol = solver_.solve(qp, &warm);
      last_qp_ = std::move(qp);
    } else {
      sol.status = SolveStatus::kNumericalFailure;
      last_qp_ = OcpQp{};
    }
    cmd.solve_time = std::chrono::duration<double>(clock::now() - t1).count();
    cmd.status = sol.status;
    cmd.iterations = sol.iterations;

    const bool usable = sol.status != SolveStatus::kNumericalFailure && sol.has_primal_for(last_qp_) && all_finite(sol);
    if (usable) {
      cmd.a = std::clamp(sol.u[0][kAccel], cfg_.a_min, cfg_.a_max);
      cmd.delta_sp = std::clamp(sol.u[0][kSteerSetpoint], -cfg_.delta_sp_max, cfg_.delta_sp_max);
      last_solution_ = sol;
      guess_ = shift(sol);
    } else {
      cmd.fallback = true;
      cmd.a = cfg_.a_min;
      cmd.delta_sp = last_delta_sp_;
      last_solution_ = OcpSolution{};
      guess_ = initial_guess(est, curve, cfg_);
    }
    last_delta_sp_ = cmd.delta_sp;
    if (!buffer_.empty()) {
      buffer_.erase(buffer_.begin());
      buffer_.push_back(cmd.delta_sp);
    }
    return cmd;
  }

  const GuessTrajectory & guess() const { return guess_; }
  const std::vector<double> & buffer() const { return buffer_; }
  const OcpSolution & last_solution() const { return last_solution_; }
  /// QP of the most recent step; empty when its construction failed.
  const OcpQp & last_qp() const { return last_qp_; }
  const std::vector<ReferencePoint> & last_references() const { return refs_; }
  const std::vector<ObstacleHalfplane> & last_halfplanes() const { return halfplanes_; }
  long solve_count() const { return solver_.solve_count(); }

private:
  static bool all_finite(const OcpSolution & s)
  {
    for (const auto & x : s.x) {
      if (!x.allFinite()) { return false; }
    }
    for (const auto & u : s.u) {
      if (!u.allFinite()) { return false; }
    }
    return true;
  }

  ControllerConfig cfg_;
  RiccatiIpmSolver solver_;
  GuessTrajectory guess_;
  std::vector<double> buffer_;
  double last_delta_sp_{0.0};
  OcpSolution last_solution_;
  OcpQp last_qp_;
  std::vector<ReferencePoint> refs_;
  std::vector<ObstacleHalfplane> halfplanes_;
};

}  // namespace urbanmpc

#endif  // URBANMPC__RTI_CONTROLLER_HPP_
