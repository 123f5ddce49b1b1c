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

#ifndef URBANMPC__ADAPTIVE_INTEGRATOR_HPP_
#define URBANMPC__ADAPTIVE_INTEGRATOR_HPP_

// Error-controlled plant integration (Dormand-Prince 5(4) via Boost.odeint).

#include <array>

#include <boost/numeric/odeint.hpp>

#include "urbanmpc/vehicle_model.hpp"

namespace urbanmpc {

/// Integrates the bicycle ODE over `duration` with input held constant.
inline StateVector integrate_adaptive(
  const StateVector & s0, const InputVector & u, const VehicleParams & p, double duration, double tol = 1e-10)
{
  namespace ode = boost::numeric::odeint;
  using OdeState = std::array<double, kNx>;

  OdeState s;
  for (Eigen::Index i = 0; i < kNx; ++i) { s[i] = s0[i]; }

  auto rhs = [&](const OdeState & x, OdeState & dxdt, double /*t*/) {
    const StateVector d = eval_continuous(StateVector(Eigen::Map<const StateVector>(x.data())), u, p);
    for (Eigen::Index i = 0; i < kNx; ++i) { dxdt[i] = d[i]; }
  };

  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<OdeState>{});
  ode::integrate_adaptive(stepper, rhs, s, 0.0, duration, duration / 10.0);

  return Eigen::Map<const StateVector>(s.data());
}

}  // namespace urbanmpc

#endif  // URBANMPC__ADAPTIVE_INTEGRATOR_HPP_
