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

#ifndef URBANMPC__QP_RANDOM_HPP_
#define URBANMPC__QP_RANDOM_HPP_

// Random feasible OcpQp instances for benchmarking and testing. Feasibility
// is built in: an interior trajectory is sampled first and every row bound is
// placed around its value there.

#include <Eigen/Core>

#include <algorithm>
#include <random>

#include "urbanmpc/ocp_qp.hpp"

namespace urbanmpc {

struct RandomQpOptions
{
  int max_horizon{20};
  int max_nx{6};
  int max_nu{3};
  int max_rows{4};
  double p_soft{0.3};        ///< probability a row is soft
  double p_one_sided{0.2};   ///< probability a row side is dropped
  bool constraints{true};
  double slack_weight_lo{1.0};
  double slack_weight_hi{10.0};
};

/// Interior trajectory used to build the instance (hard rows hold strictly there).
struct RandomQpInstance
{
  OcpQp qp;
  std::vector<Eigen::VectorXd> interior_x;
  std::vector<Eigen::VectorXd> interior_u;
};

inline RandomQpInstance random_ocp_qp(std::mt19937_64 & rng, const RandomQpOptions & opt = {})
{
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto randi = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto randn = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) { m(i, j) = gauss(rng); }
    }
    return m;
  };

  const int N = randi(1, opt.max_horizon);
  const Eigen::Index nx = randi(1, opt.max_nx);
  const Eigen::Index nu = randi(1, opt.max_nu);

  RandomQpInstance inst;
  OcpQp & qp = inst.qp;
  qp.x0 = randn(nx, 1);
  inst.interior_x.push_back(qp.x0);
  for (int k = 0; k <= N; ++k) {
    const bool terminal = k == N;
    const Eigen::Index nuk = terminal ? 0 : nu;
    OcpStage s = OcpStage::zeros(nx, nuk, terminal);
    const Eigen::MatrixXd L = randn(nx + nuk, nx + nuk) / std::sqrt(static_cast<double>(nx + nuk));
    Eigen::MatrixXd H = L.transpose() * L;
    H.diagonal().tail(nuk).array() += 0.1;
    s.Q = H.topLeftCorner(nx, nx);
    s.S = H.topRightCorner(nx, nuk);
    s.R = H.bottomRightCorner(nuk, nuk);
    s.q = 3.0 * randn(nx, 1);
    s.r = 3.0 * randn(nuk, 1);

    const Eigen::VectorXd uk = terminal ? Eigen::VectorXd() : Eigen::VectorXd(randn(nu, 1));
    if (!terminal) {
      s.A = Eigen::MatrixXd::Identity(nx, nx) + 0.2 * randn(nx, nx);
      s.B = 0.5 * randn(nx, nu);
      s.b = 0.1 * randn(nx, 1);
      inst.interior_u.push_back(uk);
    }

    if (opt.constraints) {
      const int m = randi(0, opt.max_rows);
      const Eigen::VectorXd & xk = inst.interior_x.back();
      for (int i = 0; i < m; ++i) {
        const Eigen::VectorXd c = randn(nx, 1);
        const Eigen::VectorXd d = nuk > 0 ? Eigen::VectorXd(randn(nuk, 1)) : Eigen::VectorXd();
        double a = c.dot(xk);
        if (nuk > 0) { a += d.dot(uk); }
        double lo = a - (0.1 + 0.9 * unif(rng));
        double hi = a + (0.1 + 0.9 * unif(rng));
        const double drop = unif(rng);
        if (drop < 0.5 * opt.p_one_sided) {
          lo = -kInf;
        } else if (drop < opt.p_one_sided) {
          hi = kInf;
        }
        const double w = unif(rng) < opt.p_soft
                           ? opt.slack_weight_lo + (opt.slack_weight_hi - opt.slack_weight_lo) * unif(rng)
                           : 0.0;
        s.add_row(c, d, lo, hi, w);
      }
    }
    if (!terminal) { inst.interior_x.push_back(s.A * inst.interior_x.back() + s.B * uk + s.b); }
    qp.stages.push_back(std::move(s));
  }
  return inst;
}

}  // namespace urbanmpc

#endif  // URBANMPC__QP_RANDOM_HPP_
