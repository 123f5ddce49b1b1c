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

#ifndef URBANMPC_TESTS__DENSE_QP_ORACLE_HPP_
#define URBANMPC_TESTS__DENSE_QP_ORACLE_HPP_

// Reference solvers used only by the tests. They share no code with the
// structured solver: the whole horizon is stacked into one dense QP
//   min 1/2 w^T H w + g^T w  s.t.  E w = e,  G w <= h
// and solved with a textbook Mehrotra interior-point method on the full KKT
// matrix (LU factorization). A standalone Riccati LQR is provided for
// unconstrained instances.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "urbanmpc/ocp_qp.hpp"

namespace urbanmpc::oracle {

struct DenseQp
{
  Eigen::MatrixXd H, E, G;
  Eigen::VectorXd g, e, h;
  std::vector<Eigen::Index> x_off, u_off, s_off;  // s_off per stage: first slack column
  std::vector<std::vector<Eigen::Index>> soft_rows;
};

struct DenseResult
{
  bool converged{false};
  Eigen::VectorXd w;
  double objective{0.0};
  int iterations{0};
};

inline DenseQp stack(const OcpQp & qp)
{
  DenseQp d;
  const std::size_t n = qp.stages.size();
  Eigen::Index nw = 0;
  d.x_off.resize(n);
  d.u_off.resize(n);
  d.s_off.resize(n);
  d.soft_rows.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    d.x_off[k] = nw;
    nw += qp.stages[k].nx();
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    d.u_off[k] = nw;
    nw += qp.stages[k].nu();
  }
  for (std::size_t k = 0; k < n; ++k) {
    d.s_off[k] = nw;
    for (Eigen::Index i = 0; i < qp.stages[k].rows(); ++i) {
      if (qp.stages[k].slack_weight[i] > 0.0) {
        d.soft_rows[k].push_back(i);
        ++nw;
      }
    }
  }

  d.H = Eigen::MatrixXd::Zero(nw, nw);
  d.g = Eigen::VectorXd::Zero(nw);
  Eigen::Index neq = qp.stages[0].nx();
  for (std::size_t k = 0; k + 1 < n; ++k) { neq += qp.stages[k + 1].nx(); }
  d.E = Eigen::MatrixXd::Zero(neq, nw);
  d.e = Eigen::VectorXd::Zero(neq);

  std::vector<Eigen::RowVectorXd> grows;
  std::vector<double> hrows;

  Eigen::Index eq = 0;
  const Eigen::Index nx0 = qp.stages[0].nx();
  d.E.block(0, d.x_off[0], nx0, nx0).setIdentity();
  d.e.head(nx0) = qp.x0;
  eq += nx0;

  for (std::size_t k = 0; k < n; ++k) {
    const OcpStage & s = qp.stages[k];
    const Eigen::Index nx = s.nx();
    const bool has_u = k + 1 < n;
    const Eigen::Index nu = has_u ? s.nu() : 0;
    d.H.block(d.x_off[k], d.x_off[k], nx, nx) += s.Q;
    d.g.segment(d.x_off[k], nx) += s.q;
    if (has_u && nu > 0) {
      d.H.block(d.x_off[k], d.u_off[k], nx, nu) += s.S;
      d.H.block(d.u_off[k], d.x_off[k], nu, nx) += s.S.transpose();
      d.H.block(d.u_off[k], d.u_off[k], nu, nu) += s.R;
      d.g.segment(d.u_off[k], nu) += s.r;
    }
    if (has_u) {
      const Eigen::Index nxn = qp.stages[k + 1].nx();
      d.E.block(eq, d.x_off[k + 1], nxn, nxn).setIdentity();
      d.E.block(eq, d.x_off[k], nxn, nx) -= s.A;
      if (nu > 0) { d.E.block(eq, d.u_off[k], nxn, nu) -= s.B; }
      d.e.segment(eq, nxn) = s.b;
      eq += nxn;
    }
    Eigen::Index slot = 0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const bool soft = s.slack_weight[i] > 0.0;
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nw);
      row.segment(d.x_off[k], nx) = s.C.row(i);
      if (nu > 0) { row.segment(d.u_off[k], nu) = s.D.row(i); }
      Eigen::Index scol = -1;
      if (soft) {
        scol = d.s_off[k] + slot++;
        d.g[scol] = s.slack_weight[i];
      }
      if (std::isfinite(s.du[i])) {
        Eigen::RowVectorXd r = row;
        if (soft) { r[scol] = -1.0; }
        grows.push_back(r);
        hrows.push_back(s.du[i]);
      }
      if (std::isfinite(s.dl[i])) {
        Eigen::RowVectorXd r = -row;
        if (soft) { r[scol] = -1.0; }
        grows.push_back(r);
        hrows.push_back(-s.dl[i]);
      }
      if (soft) {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nw);
        r[scol] = -1.0;
        grows.push_back(r);
        hrows.push_back(0.0);
      }
    }
  }
  d.G.resize(static_cast<Eigen::Index>(grows.size()), nw);
  d.h.resize(static_cast<Eigen::Index>(hrows.size()));
  for (std::size_t j = 0; j < grows.size(); ++j) {
    d.G.row(static_cast<Eigen::Index>(j)) = grows[j];
    d.h[static_cast<Eigen::Index>(j)] = hrows[j];
  }
  return d;
}

/// Mehrotra predictor-corrector on the full KKT system.
inline DenseResult solve_dense(const DenseQp & d, double tol = 1e-8, int max_iter = 200)
{
  const Eigen::Index nw = d.H.rows(), ne = d.E.rows(), mi = d.G.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nw), y = Eigen::VectorXd::Zero(ne);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(mi), z = Eigen::VectorXd::Ones(mi);

  DenseResult res;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd rd = d.H * w + d.g + d.E.transpose() * y + d.G.transpose() * z;
    const Eigen::VectorXd rp = d.E * w - d.e;
    const Eigen::VectorXd ri = d.G * w + s - d.h;
    const double mu = mi > 0 ? s.dot(z) / static_cast<double>(mi) : 0.0;
    const double err = std::max({rd.lpNorm<Eigen::Infinity>(), ne ? rp.lpNorm<Eigen::Infinity>() : 0.0,
                                 mi ? ri.lpNorm<Eigen::Infinity>() : 0.0, mi ? (s.cwiseProduct(z)).maxCoeff() : 0.0});
    if (err < tol) {
      res.converged = true;
      res.iterations = it;
      break;
    }
    const Eigen::VectorXd dinv = z.cwiseQuotient(s);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nw + ne, nw + ne);
    K.topLeftCorner(nw, nw) = d.H + d.G.transpose() * dinv.asDiagonal() * d.G;
    K.topRightCorner(nw, ne) = d.E.transpose();
    K.bottomLeftCorner(ne, nw) = d.E;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);

    auto solve_dir = [&](const Eigen::VectorXd & rc, Eigen::VectorXd & dw, Eigen::VectorXd & dy, Eigen::VectorXd & ds,
                         Eigen::VectorXd & dz) {
      Eigen::VectorXd rhs(nw + ne);
      rhs.head(nw) = -rd - d.G.transpose() * ((z.cwiseProduct(ri) - rc).cwiseQuotient(s));
      rhs.tail(ne) = -rp;
      const Eigen::VectorXd sol = lu.solve(rhs);
      dw = sol.head(nw);
      dy = sol.tail(ne);
      ds = -ri - d.G * dw;
      dz = (z.cwiseProduct(ri + d.G * dw) - rc).cwiseQuotient(s);
    };
    auto step_len = [&](const Eigen::VectorXd & ds, const Eigen::VectorXd & dz, double tau) {
      double a = 1.0;
      for (Eigen::Index j = 0; j < mi; ++j) {
        if (ds[j] < 0) { a = std::min(a, -tau * s[j] / ds[j]); }
        if (dz[j] < 0) { a = std::min(a, -tau * z[j] / dz[j]); }
      }
      return a;
    };

    Eigen::VectorXd dw, dy, ds, dz;
    solve_dir(s.cwiseProduct(z), dw, dy, ds, dz);
    const double a_aff = step_len(ds, dz, 1.0);
    const double mu_aff = mi > 0 ? (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(mi) : 0.0;
    const double sigma = mu > 0 ? std::pow(mu_aff / mu, 3.0) : 0.0;
    const Eigen::VectorXd rc = (s.cwiseProduct(z) + ds.cwiseProduct(dz)).array() - sigma * mu;
    solve_dir(rc, dw, dy, ds, dz);
    const double a = step_len(ds, dz, 0.99);
    w += a * dw;
    y += a * dy;
    s += a * ds;
    z += a * dz;
    res.iterations = it + 1;
  }
  res.w = w;
  res.objective = 0.5 * w.dot(d.H * w) + d.g.dot(w);
  return res;
}

/// Textbook finite-horizon LQR for x+ = A x + B u with cost 1/2 x'Qx + 1/2 u'Ru,
/// rolled out from x0. Ignores S, q, r, b and constraints.
inline void lqr_rollout(const OcpQp & qp, std::vector<Eigen::VectorXd> & xs, std::vector<Eigen::VectorXd> & us)
{
  const std::size_t n = qp.stages.size();
  std::vector<Eigen::MatrixXd> gains(n - 1);
  Eigen::MatrixXd P = qp.stages.back().Q;
  for (std::size_t k = n - 1; k-- > 0;) {
    const OcpStage & s = qp.stages[k];
    const Eigen::MatrixXd BtP = s.B.transpose() * P;
    gains[k] = (s.R + BtP * s.B).ldlt().solve(BtP * s.A);
    P = s.Q + s.A.transpose() * P * (s.A - s.B * gains[k]);
  }
  xs.assign(1, qp.x0);
  us.clear();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    us.push_back(-gains[k] * xs.back());
    xs.push_back(qp.stages[k].A * xs.back() + qp.stages[k].B * us.back());
  }
}

}  // namespace urbanmpc::oracle

#endif  // URBANMPC_TESTS__DENSE_QP_ORACLE_HPP_
