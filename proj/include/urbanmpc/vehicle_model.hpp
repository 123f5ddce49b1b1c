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

#ifndef URBANMPC__VEHICLE_MODEL_HPP_
#define URBANMPC__VEHICLE_MODEL_HPP_

/**
 * @file
 * @brief Kinematic bicycle with a second-order steering actuator.
 *
 * State  x = (x, y, v, theta, delta, omega), position of the rear wheel.
 * Input  u = (a, delta_sp).
 *
 *   xdot     = v cos(theta)
 *   ydot     = v sin(theta)
 *   vdot     = a
 *   thetadot = v / l_w * tan(delta)
 *   deltadot = omega
 *   omegadot = w0^2 (delta_sp - delta) - 2 zeta omega
 *
 * The damping term uses zeta in 1/s exactly as written above (not 2 zeta w0).
 */

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace urbanmpc {

inline constexpr Eigen::Index kNx = 6;
inline constexpr Eigen::Index kNu = 2;

using StateVector = Eigen::Matrix<double, kNx, 1>;
using InputVector = Eigen::Matrix<double, kNu, 1>;
using StateMatrix = Eigen::Matrix<double, kNx, kNx>;
using InputMatrix = Eigen::Matrix<double, kNx, kNu>;

/// Indices into StateVector.
enum StateIndex : Eigen::Index { kX = 0, kY = 1, kV = 2, kTheta = 3, kDelta = 4, kOmega = 5 };
/// Indices into InputVector.
enum InputIndex : Eigen::Index { kAccel = 0, kSteerSetpoint = 1 };

/// Raised when the steering angle reaches the tan() singularity.
class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

struct VehicleState
{
  double x{0.0};      ///< rear-axle east [m]
  double y{0.0};      ///< rear-axle north [m]
  double v{0.0};      ///< speed [m/s]
  double theta{0.0};  ///< heading, unwrapped [rad]
  double delta{0.0};  ///< steering angle [rad]
  double omega{0.0};  ///< steering rate [rad/s]

  StateVector vector() const
  {
    StateVector s;
    s << x, y, v, theta, delta, omega;
    return s;
  }

  static VehicleState from_vector(const StateVector & s)
  {
    return {s[kX], s[kY], s[kV], s[kTheta], s[kDelta], s[kOmega]};
  }

  bool operator==(const VehicleState &) const = default;
};

struct ControlInput
{
  double a{0.0};         ///< longitudinal acceleration [m/s^2]
  double delta_sp{0.0};  ///< steering setpoint [rad]

  InputVector vector() const { return InputVector(a, delta_sp); }
  static ControlInput from_vector(const InputVector & u) { return {u[kAccel], u[kSteerSetpoint]}; }

  bool operator==(const ControlInput &) const = default;
};

struct VehicleParams
{
  double l_w{2.984};    ///< wheel base [m]
  double w0{20.0};      ///< actuator natural frequency [1/s]
  double zeta{0.9};     ///< actuator damping [1/s]
  double dt{0.05};      ///< discretization time [s]
  int n_rk4_steps{5};   ///< RK4 substeps per dt

  void validate() const
  {
    if (!(l_w > 0.0) || !(w0 > 0.0) || !(zeta >= 0.0) || !(dt > 0.0) || n_rk4_steps < 1) {
      throw std::invalid_argument("VehicleParams: require l_w > 0, w0 > 0, zeta >= 0, dt > 0, n_rk4_steps >= 1");
    }
  }
};

/// Discrete-time linearization of the RK4 map at a guess.
struct Sensitivities
{
  StateMatrix A{StateMatrix::Zero()};
  InputMatrix B{InputMatrix::Zero()};
  /// f(x_guess, u_guess) - x_next_guess
  StateVector b{StateVector::Zero()};
};

namespace detail {

inline void check_steering(double delta)
{
  if (!std::isfinite(delta) || std::abs(delta) >= std::numbers::pi / 2) {
    throw DomainError("steering angle " + std::to_string(delta) + " at or beyond the tan() singularity");
  }
}

/// Continuous-time Jacobians df/dx, df/du.
inline void continuous_jacobians(
  const StateVector & s, const VehicleParams & p, StateMatrix & fx, InputMatrix & fu)
{
  const double v = s[kV], th = s[kTheta], de = s[kDelta];
  const double c = std::cos(th), sn = std::sin(th);
  const double t = std::tan(de);
  fx.setZero();
  fx(kX, kV) = c;
  fx(kX, kTheta) = -v * sn;
  fx(kY, kV) = sn;
  fx(kY, kTheta) = v * c;
  fx(kTheta, kV) = t / p.l_w;
  fx(kTheta, kDelta) = v / p.l_w * (1.0 + t * t);
  fx(kDelta, kOmega) = 1.0;
  fx(kOmega, kDelta) = -p.w0 * p.w0;
  fx(kOmega, kOmega) = -2.0 * p.zeta;
  fu.setZero();
  fu(kV, kAccel) = 1.0;
  fu(kOmega, kSteerSetpoint) = p.w0 * p.w0;
}

}  // namespace detail

/// Right-hand side of the bicycle ODE. Throws DomainError for |delta| >= pi/2.
inline StateVector eval_continuous(const StateVector & s, const InputVector & u, const VehicleParams & p)
{
  detail::check_steering(s[kDelta]);
  StateVector d;
  d[kX] = s[kV] * std::cos(s[kTheta]);
  d[kY] = s[kV] * std::sin(s[kTheta]);
  d[kV] = u[kAccel];
  d[kTheta] = s[kV] / p.l_w * std::tan(s[kDelta]);
  d[kDelta] = s[kOmega];
  d[kOmega] = p.w0 * p.w0 * (u[kSteerSetpoint] - s[kDelta]) - 2.0 * p.zeta * s[kOmega];
  return d;
}

inline StateVector eval_continuous(const VehicleState & s, const ControlInput & u, const VehicleParams & p)
{
  return eval_continuous(s.vector(), u.vector(), p);
}

/// Classical RK4 with p.n_rk4_steps equal substeps over p.dt.
inline StateVector step_rk4(const StateVector & s0, const InputVector & u, const VehicleParams & p)
{
  const double h = p.dt / p.n_rk4_steps;
  StateVector s = s0;
  for (int i = 0; i < p.n_rk4_steps; ++i) {
    const StateVector k1 = eval_continuous(s, u, p);
    const StateVector k2 = eval_continuous(StateVector(s + 0.5 * h * k1), u, p);
    const StateVector k3 = eval_continuous(StateVector(s + 0.5 * h * k2), u, p);
    const StateVector k4 = eval_continuous(StateVector(s + h * k3), u, p);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

inline VehicleState step_rk4(const VehicleState & s, const ControlInput & u, const VehicleParams & p)
{
  return VehicleState::from_vector(step_rk4(s.vector(), u.vector(), p));
}

/**
 * @brief Exact Jacobians of the discrete RK4 map, by forward-mode propagation
 * through every stage of every substep.
 *
 * Also returns the map value through `next` so callers get f(x, u) for free.
 */
inline void rk4_with_jacobians(
  const StateVector & s0, const InputVector & u, const VehicleParams & p, StateVector & next,
  StateMatrix & A, InputMatrix & B)
{
  const double h = p.dt / p.n_rk4_steps;
  StateVector s = s0;
  A.setIdentity();
  B.setZero();

  StateMatrix fx;
  InputMatrix fu;
  for (int i = 0; i < p.n_rk4_steps; ++i) {
    // d(stage input)/d(s_substep start) and d/du for each of the four stages
    const StateVector k1 = eval_continuous(s, u, p);
    detail::continuous_jacobians(s, p, fx, fu);
    const StateMatrix k1x = fx;
    const InputMatrix k1u = fu;

    const StateVector s2 = s + 0.5 * h * k1;
    const StateVector k2 = eval_continuous(s2, u, p);
    detail::continuous_jacobians(s2, p, fx, fu);
    const StateMatrix k2x = fx * (StateMatrix::Identity() + 0.5 * h * k1x);
    const InputMatrix k2u = fx * (0.5 * h * k1u) + fu;

    const StateVector s3 = s + 0.5 * h * k2;
    const StateVector k3 = eval_continuous(s3, u, p);
    detail::continuous_jacobians(s3, p, fx, fu);
    const StateMatrix k3x = fx * (StateMatrix::Identity() + 0.5 * h * k2x);
    const InputMatrix k3u = fx * (0.5 * h * k2u) + fu;

    const StateVector s4 = s + h * k3;
    const StateVector k4 = eval_continuous(s4, u, p);
    detail::continuous_jacobians(s4, p, fx, fu);
    const StateMatrix k4x = fx * (StateMatrix::Identity() + h * k3x);
    const InputMatrix k4u = fx * (h * k3u) + fu;

    const StateMatrix Asub = StateMatrix::Identity() + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    const InputMatrix Bsub = h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    B = Asub * B + Bsub;
    A = Asub * A;
  }
  next = s;
}

/// A, B of the RK4 map at the guess and residual b = f(guess) - next_state_guess.
inline Sensitivities sensitivities(
  const StateVector & state_guess, const InputVector & input_guess, const StateVector & next_state_guess,
  const VehicleParams & p)
{
  Sensitivities out;
  StateVector next;
  rk4_with_jacobians(state_guess, input_guess, p, next, out.A, out.B);
  out.b = next - next_state_guess;
  return out;
}

inline Sensitivities sensitivities(
  const VehicleState & state_guess, const ControlInput & input_guess, const VehicleState & next_state_guess,
  const VehicleParams & p)
{
  return sensitivities(state_guess.vector(), input_guess.vector(), next_state_guess.vector(), p);
}

}  // namespace urbanmpc

#endif  // URBANMPC__VEHICLE_MODEL_HPP_
