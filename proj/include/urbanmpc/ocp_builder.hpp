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

#ifndef URBANMPC__OCP_BUILDER_HPP_
#define URBANMPC__OCP_BUILDER_HPP_

/**
 * @file
 * @brief Per-cycle QP assembly for the tracking controller.
 *
 * The QP is posed in absolute variables. Its state may be augmented with a
 * buffer of n_d pending steering setpoints: z = [x; b_0 .. b_{n_d-1}], where b_0
 * is the setpoint acting on the actuator during the current step. The input is
 * always (a, delta_sp) and delta_sp enters the back of the buffer.
 */

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urbanmpc/ocp_qp.hpp"
#include "urbanmpc/pedestrian_prediction.hpp"
#include "urbanmpc/reference_path.hpp"
#include "urbanmpc/vehicle_model.hpp"

namespace urbanmpc {

struct ControllerConfig
{
  int horizon{100};
  std::array<double, 5> q_bar{2.0, 0.1, 10.0, 0.1, 10.0};  ///< position, v, theta, delta, omega
  std::array<double, 2> r_bar{2.0, 1.0};                   ///< a, delta_sp

  double v_min{-1.0};
  double v_max{20.0};
  double delta_max{0.4942};
  double omega_max{0.1765};
  double a_min{-2.0};
  double a_max{1.0};
  double delta_sp_max{0.4942};

  double lateral_bound{1.0};           ///< l_d [m]
  double road_slack_weight{1.0e3};
  double pedestrian_slack_weight{1.0e5};

  /// a1 v + b1 delta <= c1 and a2 v + b2 delta >= c2
  bool speed_steering_limit{false};
  double a1{0.01971}, b1{1.0}, c1{0.4942};
  double a2{-0.01971}, b2{1.0}, c2{-0.4942};

  double ego_semi_major{2.5};  ///< along the heading [m]
  double ego_semi_minor{1.1};  ///< [m]
  double activation_radius{30.0};

  double delay{0.0};  ///< steering command delay [s]

  VehicleParams vehicle{};

  int delay_steps() const { return static_cast<int>(std::lround(delay / vehicle.dt)); }

  void validate() const
  {
    vehicle.validate();
    if (horizon < 1) { throw std::invalid_argument("controller: horizon must be >= 1"); }
    for (const double q : q_bar) {
      if (!(q >= 0.0)) { throw std::invalid_argument("controller: state weights must be >= 0"); }
    }
    for (const double r : r_bar) {
      if (!(r > 0.0)) { throw std::invalid_argument("controller: input weights must be > 0"); }
    }
    if (!(v_min < v_max) || !(delta_max > 0.0) || !(omega_max > 0.0) || !(a_min < a_max) || !(delta_sp_max > 0.0)) {
      throw std::invalid_argument("controller: empty actuator box");
    }
    if (!(lateral_bound > 0.0)) { throw std::invalid_argument("controller: lateral_bound must be > 0"); }
    if (!(road_slack_weight > 0.0) || !(pedestrian_slack_weight > 0.0)) {
      throw std::invalid_argument("controller: slack weights must be > 0");
    }
    if (!(ego_semi_major > 0.0) || !(ego_semi_minor > 0.0)) {
      throw std::invalid_argument("controller: vehicle footprint semi-axes must be > 0");
    }
    if (!(activation_radius > 0.0)) { throw std::invalid_argument("controller: activation_radius must be > 0"); }
    if (!(delay >= 0.0) || !std::isfinite(delay)) { throw std::invalid_argument("controller: delay must be >= 0"); }
  }
};

/// Shifted previous solution used as linearization point.
struct GuessTrajectory
{
  std::vector<StateVector> x;  ///< N+1
  std::vector<InputVector> u;  ///< N; u[k] = (a_k, setpoint entering the buffer at k)

  int horizon() const { return static_cast<int>(u.size()); }
};

struct StageCost
{
  StateMatrix Q{StateMatrix::Zero()};
  Eigen::Matrix2d R{Eigen::Matrix2d::Zero()};
  Eigen::Matrix<double, kNx, kNu> S{Eigen::Matrix<double, kNx, kNu>::Zero()};
};

/// One row lo <= c^T x + d^T u <= hi on the physical state and input.
struct ConstraintRow
{
  enum class Source : unsigned char { kState, kInput, kSteeringLimit, kRoad, kPedestrian };

  Eigen::Matrix<double, 1, kNx> c{Eigen::Matrix<double, 1, kNx>::Zero()};
  Eigen::Matrix<double, 1, kNu> d{Eigen::Matrix<double, 1, kNu>::Zero()};
  double lo{-kInf};
  double hi{kInf};
  double weight{0.0};  ///< L1 weight; 0 for hard rows
  Source source{Source::kState};
};

using StageConstraints = std::vector<std::vector<ConstraintRow>>;  ///< indexed by stage 0..N

struct ObstacleHalfplane
{
  int stage{0};
  std::size_t pedestrian{0};
  std::size_t hypothesis{0};
  Eigen::Vector2d normal{1.0, 0.0};  ///< Delta^ped, unit length
  Eigen::Vector2d lb{0.0, 0.0};      ///< Delta^ped lb <= Delta^ped [x; y]
  double phi{0.0};                   ///< bearing from vehicle center to pedestrian [rad]
  double d_ego{0.0};
  double d_ped{0.0};
  double d_safe{0.0};
  Eigen::Vector2d ego_center{0.0, 0.0};
};

/// Rank-one projector onto (sin theta, cos theta).
inline Eigen::Matrix2d rotation_cost(double theta)
{
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d T;
  T << s * s, c * s, c * s, c * c;
  return T;
}

/// Distance from an ellipse center to its boundary in direction `psi` relative to the major axis.
inline double support_radius(double semi_major, double semi_minor, double psi)
{
  const double ca = semi_minor * std::cos(psi), sb = semi_major * std::sin(psi);
  const double den = std::sqrt(ca * ca + sb * sb);
  return den > 0.0 ? semi_major * semi_minor / den : 0.0;
}

inline std::vector<StageCost> build_cost(std::span<const ReferencePoint> refs, const ControllerConfig & cfg)
{
  if (refs.size() < 2) { throw std::invalid_argument("build_cost: need N+1 >= 2 references"); }
  std::vector<StageCost> costs(refs.size());
  for (std::size_t k = 0; k + 1 < refs.size(); ++k) {
    StageCost & c = costs[k];
    c.Q.topLeftCorner<2, 2>() = cfg.q_bar[0] * rotation_cost(-refs[k].theta);
    for (int i = 1; i < 5; ++i) { c.Q(i + 1, i + 1) = cfg.q_bar[static_cast<std::size_t>(i)]; }
    c.R.diagonal() << cfg.r_bar[0], cfg.r_bar[1];
  }
  costs.back().Q = costs[refs.size() - 2].Q;
  return costs;
}

/// Two-sided soft lateral rows on stages 1..N around the projection of each guess position.
inline StageConstraints build_road_constraints(
  const GuessTrajectory & guess, const ReferenceCurve & curve, const ControllerConfig & cfg)
{
  StageConstraints rows(guess.x.size());
  for (std::size_t k = 1; k < guess.x.size(); ++k) {
    const Projection pr = curve.project(guess.x[k].head<2>(), guess.x[k][kTheta]);
    const double s = std::sin(-pr.tangent), c = std::cos(-pr.tangent);
    ConstraintRow r;
    r.c(kX) = s;
    r.c(kY) = c;
    const double center = pr.point.x() * s + pr.point.y() * c;
    r.lo = center - cfg.lateral_bound;
    r.hi = center + cfg.lateral_bound;
    r.weight = cfg.road_slack_weight;
    r.source = ConstraintRow::Source::kRoad;
    rows[k].push_back(r);
  }
  return rows;
}

/// Half-planes on stages 1..N for every hypothesis whose stage-k position lies within the activation radius.
inline std::vector<ObstacleHalfplane> build_pedestrian_halfplanes(
  const GuessTrajectory & guess, std::span<const PedestrianPrediction> predictions, const ControllerConfig & cfg)
{
  std::vector<ObstacleHalfplane> out;
  const double half_wb = 0.5 * cfg.vehicle.l_w;
  for (std::size_t k = 1; k < guess.x.size(); ++k) {
    const StateVector & g = guess.x[k];
    const Eigen::Vector2d pg = g.head<2>();
    const double th = g[kTheta];
    const Eigen::Vector2d ego = pg + half_wb * Eigen::Vector2d(std::cos(th), std::sin(th));
    for (const PedestrianPrediction & pred : predictions) {
      if (k >= pred.stages.size()) { continue; }
      const PredictedStage & ps = pred.stages[k];
      const Eigen::Vector2d ped(ps.x, ps.y);
      if ((ped - pg).norm() > cfg.activation_radius) { continue; }
      ObstacleHalfplane h;
      h.stage = static_cast<int>(k);
      h.pedestrian = pred.pedestrian;
      h.hypothesis = pred.hypothesis;
      h.ego_center = ego;
      h.phi = std::atan2(ego.y() - ped.y(), ego.x() - ped.x()) + std::numbers::pi;
      const Eigen::Vector2d dir(std::cos(h.phi), std::sin(h.phi));
      h.d_ped = support_radius(ps.lambda_a, ps.lambda_b, h.phi - ps.alpha);
      h.d_ego = support_radius(cfg.ego_semi_major, cfg.ego_semi_minor, h.phi - th);
      h.d_safe = h.d_ego + h.d_ped;
      h.normal = -dir;
      h.lb = ped - h.d_safe * dir - (ego - pg);
      out.push_back(h);
    }
  }
  return out;
}

inline StageConstraints pedestrian_rows(
  std::span<const ObstacleHalfplane> planes, std::size_t n_stages, const ControllerConfig & cfg)
{
  StageConstraints rows(n_stages);
  for (const ObstacleHalfplane & h : planes) {
    ConstraintRow r;
    r.c(kX) = h.normal.x();
    r.c(kY) = h.normal.y();
    r.lo = h.normal.dot(h.lb);
    r.hi = kInf;
    r.weight = cfg.pedestrian_slack_weight;
    r.source = ConstraintRow::Source::kPedestrian;
    rows[static_cast<std::size_t>(h.stage)].push_back(r);
  }
  return rows;
}

inline StageConstraints build_pedestrian_constraints(
  const GuessTrajectory & guess, std::span<const PedestrianPrediction> predictions, const ControllerConfig & cfg)
{
  const auto planes = build_pedestrian_halfplanes(guess, predictions, cfg);
  return pedestrian_rows(planes, guess.x.size(), cfg);
}

/**
 * @brief Hard actuator rows. Input boxes on stages 0..N-1; state boxes and the
 * speed-dependent steering rows on stages 1..N. With a delay of n_d steps the
 * steering states of stages 1..n_d are fixed by commands already sent, so their
 * rows are left out.
 */
inline StageConstraints build_input_constraints(const GuessTrajectory & guess, const ControllerConfig & cfg)
{
  const std::size_t n = guess.x.size();
  const std::size_t nd = static_cast<std::size_t>(cfg.delay_steps());
  StageConstraints rows(n);
  auto state_row = [](Eigen::Index i, double lo, double hi) {
    ConstraintRow r;
    r.c(i) = 1.0;
    r.lo = lo;
    r.hi = hi;
    r.source = ConstraintRow::Source::kState;
    return r;
  };
  for (std::size_t k = 0; k < n; ++k) {
    if (k + 1 < n) {
      ConstraintRow a;
      a.d(kAccel) = 1.0;
      a.lo = cfg.a_min;
      a.hi = cfg.a_max;
      a.source = ConstraintRow::Source::kInput;
      rows[k].push_back(a);
      ConstraintRow sp;
      sp.d(kSteerSetpoint) = 1.0;
      sp.lo = -cfg.delta_sp_max;
      sp.hi = cfg.delta_sp_max;
      sp.source = ConstraintRow::Source::kInput;
      rows[k].push_back(sp);
    }
    if (k == 0) { continue; }
    rows[k].push_back(state_row(kV, cfg.v_min, cfg.v_max));
    if (k <= nd) { continue; }
    rows[k].push_back(state_row(kDelta, -cfg.delta_max, cfg.delta_max));
    rows[k].push_back(state_row(kOmega, -cfg.omega_max, cfg.omega_max));
    if (cfg.speed_steering_limit) {
      ConstraintRow up;
      up.c(kV) = cfg.a1;
      up.c(kDelta) = cfg.b1;
      up.hi = cfg.c1;
      up.source = ConstraintRow::Source::kSteeringLimit;
      rows[k].push_back(up);
      ConstraintRow lo;
      lo.c(kV) = cfg.a2;
      lo.c(kDelta) = cfg.b2;
      lo.lo = cfg.c2;
      lo.source = ConstraintRow::Source::kSteeringLimit;
      rows[k].push_back(lo);
    }
  }
  return rows;
}

/// Setpoint acting on the actuator at stage k, given the buffer at stage 0 and the input guesses.
inline double applied_setpoint(std::span<const double> buffer0, const std::vector<InputVector> & u, std::size_t k)
{
  const std::size_t nd = buffer0.size();
  return k < nd ? buffer0[k] : u[k - nd][kSteerSetpoint];
}

/// Augmented state z_k = [x_k; b_k] of a guess.
inline Eigen::VectorXd augmented_state(
  const GuessTrajectory & guess, std::span<const double> buffer0, std::size_t k)
{
  const std::size_t nd = buffer0.size();
  Eigen::VectorXd z(kNx + static_cast<Eigen::Index>(nd));
  z.head<kNx>() = guess.x[k];
  for (std::size_t i = 0; i < nd; ++i) {
    z[kNx + static_cast<Eigen::Index>(i)] = applied_setpoint(buffer0, guess.u, k + i);
  }
  return z;
}

/**
 * @brief Linearized OCP around `guess`. `x0` is the estimate and `buffer0` the n_d
 * pending setpoints (oldest first). Costs are scaled to the 1/2 convention of
 * OcpQp, so the stage cost equals (x - r)^T Q (x - r) + (u - r_u)^T R (u - r_u) up to a constant.
 */
inline OcpQp assemble_qp(
  const StateVector & x0, std::span<const double> buffer0, const GuessTrajectory & guess,
  std::span<const ReferencePoint> refs, std::span<const StageCost> costs,
  std::span<const StageConstraints * const> constraint_sets, const VehicleParams & vp)
{
  const std::size_t n = guess.x.size();
  if (guess.u.size() + 1 != n || refs.size() != n || costs.size() != n) {
    throw std::invalid_argument("assemble_qp: inconsistent horizon lengths");
  }
  const Eigen::Index nd = static_cast<Eigen::Index>(buffer0.size());
  const Eigen::Index nz = kNx + nd;

  OcpQp qp;
  qp.x0.resize(nz);
  qp.x0.head<kNx>() = x0;
  for (Eigen::Index i = 0; i < nd; ++i) { qp.x0[kNx + i] = buffer0[static_cast<std::size_t>(i)]; }
  qp.stages.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    const bool terminal = k + 1 == n;
    OcpStage st = OcpStage::zeros(nz, terminal ? 0 : kNu, terminal);
    const ReferencePoint & r = refs[k];
    StateVector rx;
    rx << r.x, r.y, r.v, r.theta, r.delta, r.omega;
    st.Q.topLeftCorner<kNx, kNx>() = 2.0 * costs[k].Q;
    st.q.head<kNx>() = -2.0 * costs[k].Q * rx;

    if (!terminal) {
      const InputVector ru(r.a, r.delta_sp);
      st.R = 2.0 * costs[k].R;
      st.S.topRows<kNx>() = 2.0 * costs[k].S;
      st.r = -2.0 * costs[k].R * ru - 2.0 * costs[k].S.transpose() * rx;
      st.q.head<kNx>() -= 2.0 * costs[k].S * ru;

      // dynamics use the setpoint at the front of the buffer (or the input itself when nd = 0)
      const InputVector ug(guess.u[k][kAccel], applied_setpoint(buffer0, guess.u, k));
      StateMatrix A;
      InputMatrix B;
      StateVector fk;
      rk4_with_jacobians(guess.x[k], ug, vp, fk, A, B);
      st.A.topLeftCorner<kNx, kNx>() = A;
      st.B.col(kAccel).head<kNx>() = B.col(kAccel);
      const Eigen::VectorXd zg = augmented_state(guess, buffer0, k);
      if (nd == 0) {
        st.B.col(kSteerSetpoint).head<kNx>() = B.col(kSteerSetpoint);
      } else {
        st.A.block(0, kNx, kNx, 1) = B.col(kSteerSetpoint);
        for (Eigen::Index i = 0; i + 1 < nd; ++i) { st.A(kNx + i, kNx + i + 1) = 1.0; }
        st.B(kNx + nd - 1, kSteerSetpoint) = 1.0;
      }
      // affine term so that the linear model reproduces f at the guess
      st.b.head<kNx>() = fk - st.A.topRows<kNx>() * zg - st.B.topRows<kNx>() * guess.u[k];
    }

    for (const StageConstraints * set : constraint_sets) {
      if (set == nullptr || k >= set->size()) { continue; }
      for (const ConstraintRow & row : (*set)[k]) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(nz);
        c.head<kNx>() = row.c.transpose();
        const Eigen::VectorXd d = terminal ? Eigen::VectorXd() : Eigen::VectorXd(row.d.transpose());
        if (terminal && !row.d.isZero()) { continue; }
        st.add_row(c, d, row.lo, row.hi, row.weight);
      }
    }
    qp.stages.push_back(std::move(st));
  }
  return qp;
}

}  // namespace urbanmpc

#endif  // URBANMPC__OCP_BUILDER_HPP_
