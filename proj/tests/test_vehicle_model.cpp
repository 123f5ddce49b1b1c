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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "urbanmpc/adaptive_integrator.hpp"
#include "urbanmpc/vehicle_model.hpp"

using namespace urbanmpc;

namespace {

StateVector state(double x, double y, double v, double th, double de, double om)
{
  StateVector s;
  s << x, y, v, th, de, om;
  return s;
}

StateVector random_state(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> pos(-50.0, 50.0), vel(-1.0, 20.0), ang(-3.0, 3.0), steer(-0.45, 0.45),
    rate(-0.5, 0.5);
  return state(pos(rng), pos(rng), vel(rng), ang(rng), steer(rng), rate(rng));
}

InputVector random_input(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> acc(-2.0, 1.0), steer(-0.49, 0.49);
  return InputVector(acc(rng), steer(rng));
}

}  // namespace

TEST(EvalContinuous, StraightDriveHasNoCoupling)
{
  const VehicleParams p;
  const StateVector d = eval_continuous(state(0, 0, 10, 0, 0, 0), InputVector(1, 0), p);
  const StateVector expected = state(10, 0, 1, 0, 0, 0);
  EXPECT_EQ(d, expected);
}

TEST(EvalContinuous, YawRateIsOneAtUnitRatio)
{
  VehicleParams p;
  p.l_w = 2.984;
  const StateVector d = eval_continuous(state(0, 0, 2.984, 0, std::numbers::pi / 4, 0), InputVector(0, 0), p);
  EXPECT_NEAR(d[kTheta], 1.0, 1e-15);
}

TEST(EvalContinuous, ActuatorAcceleration)
{
  VehicleParams p;
  p.w0 = 20.0;
  p.zeta = 0.9;
  const StateVector d = eval_continuous(state(0, 0, 0, 0, 0, 0), InputVector(0, 0.1), p);
  EXPECT_NEAR(d[kOmega], 40.0, 1e-12);
}

TEST(EvalContinuous, RejectsSteeringSingularity)
{
  const VehicleParams p;
  EXPECT_THROW(eval_continuous(state(0, 0, 1, 0, std::numbers::pi / 2, 0), InputVector(0, 0), p), DomainError);
  EXPECT_THROW(eval_continuous(state(0, 0, 1, 0, -2.0, 0), InputVector(0, 0), p), DomainError);
  EXPECT_THROW(step_rk4(state(0, 0, 1, 0, 1.6, 0), InputVector(0, 0), p), DomainError);
}

TEST(VehicleParams, Validation)
{
  VehicleParams p;
  EXPECT_NO_THROW(p.validate());
  p.n_rk4_steps = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.l_w = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(StepRk4, ZeroIsFixedPoint)
{
  const VehicleParams p;
  EXPECT_EQ(step_rk4(StateVector::Zero().eval(), InputVector::Zero().eval(), p), StateVector::Zero());
}

TEST(StepRk4, ConstantVelocityTranslation)
{
  const VehicleParams p;
  const StateVector s = step_rk4(state(0, 0, 10, 0, 0, 0), InputVector(0, 0), p);
  EXPECT_NEAR((s - state(0.5, 0, 10, 0, 0, 0)).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(StepRk4, MatchesAdaptiveOracleOneStep)
{
  const VehicleParams p;
  const StateVector s0 = state(0, 0, 10, 0, 0.1, 0);
  const InputVector u(0, 0.1);
  const StateVector rk = step_rk4(s0, u, p);
  const StateVector ref = integrate_adaptive(s0, u, p, p.dt, 1e-10);
  EXPECT_LE((rk - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(StepRk4, StructOverloadAgrees)
{
  const VehicleParams p;
  const VehicleState s{1, 2, 5, 0.3, 0.05, 0.01};
  const ControlInput u{0.5, 0.1};
  EXPECT_EQ(step_rk4(s, u, p).vector(), step_rk4(s.vector(), u.vector(), p));
}

TEST(Sensitivities, ExactRolloutHasZeroResidual)
{
  const VehicleParams p;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const StateVector s = random_state(rng);
    const InputVector u = random_input(rng);
    const Sensitivities sens = sensitivities(s, u, step_rk4(s, u, p), p);
    EXPECT_LE(sens.b.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sensitivities, MatchCentralDifferences)
{
  const VehicleParams p;
  std::mt19937_64 rng(11);
  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const StateVector s = random_state(rng);
    const InputVector u = random_input(rng);
    const Sensitivities sens = sensitivities(s, u, s, p);
    StateMatrix A_fd;
    InputMatrix B_fd;
    for (Eigen::Index j = 0; j < kNx; ++j) {
      StateVector dp = s, dm = s;
      dp[j] += h;
      dm[j] -= h;
      A_fd.col(j) = (step_rk4(dp, u, p) - step_rk4(dm, u, p)) / (2 * h);
    }
    for (Eigen::Index j = 0; j < kNu; ++j) {
      InputVector dp = u, dm = u;
      dp[j] += h;
      dm[j] -= h;
      B_fd.col(j) = (step_rk4(s, dp, p) - step_rk4(s, dm, p)) / (2 * h);
    }
    worst = std::max(worst, (sens.A - A_fd).cwiseAbs().maxCoeff() / std::max(1.0, A_fd.cwiseAbs().maxCoeff()));
    worst = std::max(worst, (sens.B - B_fd).cwiseAbs().maxCoeff() / std::max(1.0, B_fd.cwiseAbs().maxCoeff()));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(Sensitivities, HeadingInsensitiveToSteeringAtStandstill)
{
  const VehicleParams p;
  const Sensitivities sens = sensitivities(StateVector::Zero().eval(), InputVector::Zero().eval(),
                                           StateVector::Zero().eval(), p);
  EXPECT_EQ(sens.A(kTheta, kDelta), 0.0);
}

TEST(Sensitivities, FirstOrderAccuracyDecaysQuadratically)
{
  const VehicleParams p;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector s = random_state(rng);
    const InputVector u = random_input(rng);
    const Sensitivities sens = sensitivities(s, u, s, p);
    StateVector dx;
    InputVector du;
    for (auto i = 0; i < kNx; ++i) { dx[i] = 1e-2 * g(rng); }
    for (auto i = 0; i < kNu; ++i) { du[i] = 1e-2 * g(rng); }
    double prev = 0.0;
    for (int halving = 0; halving < 5; ++halving) {
      const double scale = std::pow(0.5, halving);
      const StateVector rem = step_rk4(StateVector(s + scale * dx), InputVector(u + scale * du), p) -
                              step_rk4(s, u, p) - scale * (sens.A * dx + sens.B * du);
      const double e = rem.norm();
      if (halving > 0 && prev > 1e-11) {
        // a factor 4 per halving means quadratic decay; allow slack for higher-order terms
        EXPECT_GT(prev / e, 3.0);
        EXPECT_LT(prev / e, 5.0);
      }
      prev = e;
    }
  }
}

TEST(Properties, TranslationEquivariance)
{
  const VehicleParams p;
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    const StateVector s = random_state(rng);
    const InputVector u = random_input(rng);
    StateVector shifted = s;
    shifted[kX] += 12.5;
    shifted[kY] -= 3.25;
    StateVector diff = step_rk4(shifted, u, p) - step_rk4(s, u, p);
    EXPECT_NEAR(diff[kX], 12.5, 1e-9);
    EXPECT_NEAR(diff[kY], -3.25, 1e-9);
    EXPECT_LE(diff.tail<4>().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Properties, RotationEquivariance)
{
  const VehicleParams p;
  std::mt19937_64 rng(23);
  const double psi = 0.7;
  const Eigen::Matrix2d rot = Eigen::Rotation2Dd(psi).toRotationMatrix();
  for (int i = 0; i < 20; ++i) {
    const StateVector s = random_state(rng);
    const InputVector u = random_input(rng);
    StateVector r = s;
    r.head<2>() = rot * s.head<2>();
    r[kTheta] += psi;
    const StateVector a = step_rk4(s, u, p);
    const StateVector b = step_rk4(r, u, p);
    EXPECT_LE((b.head<2>() - rot * a.head<2>()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(b[kTheta], a[kTheta] + psi, 1e-12);
    EXPECT_NEAR(b[kV], a[kV], 1e-12);
    EXPECT_EQ(b[kDelta], a[kDelta]);
    EXPECT_EQ(b[kOmega], a[kOmega]);
  }
}

TEST(Properties, SteeringSubsystemIsLinearAndDecoupled)
{
  const VehicleParams p;
  // v = 0 keeps the steering angle away from the pose; the (delta, omega) block
  // must not depend on (x, y, v, theta) at all
  const StateVector s1 = state(0, 0, 0, 0, 0.1, 0.05);
  const StateVector s2 = state(0, 0, 0, 0, -0.05, 0.02);
  const InputVector u1(0, 0.2), u2(0, -0.1);
  const StateVector y1 = step_rk4(s1, u1, p), y2 = step_rk4(s2, u2, p);
  const StateVector y12 = step_rk4(StateVector(s1 + s2), InputVector(u1 + u2), p);
  EXPECT_LE((y12.tail<2>() - y1.tail<2>() - y2.tail<2>()).cwiseAbs().maxCoeff(), 1e-12);

  StateVector moved = s1;
  moved.head<4>() << 3.0, -2.0, 8.0, 1.1;
  EXPECT_LE((step_rk4(moved, u1, p).tail<2>() - y1.tail<2>()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Properties, Deterministic)
{
  const VehicleParams p;
  const StateVector s = state(1, 2, 3, 0.4, 0.1, -0.02);
  const InputVector u(0.3, -0.2);
  EXPECT_EQ(step_rk4(s, u, p), step_rk4(s, u, p));
}
