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

#ifndef URBANMPC__OCP_QP_HPP_
#define URBANMPC__OCP_QP_HPP_

/**
 * @file
 * @brief Stage-structured QP data and KKT evaluation.
 *
 * \f[
 *   \min \sum_{k=0}^{N} \tfrac12 x_k^T Q_k x_k + x_k^T S_k u_k + \tfrac12 u_k^T R_k u_k + q_k^T x_k + r_k^T u_k
 *        + \sum_i w_{k,i} s_{k,i}
 * \f]
 * subject to x_0 = x0, x_{k+1} = A_k x_k + B_k u_k + b_k, and per row i of stage k
 * dl_i - s_i <= C_i x_k + D_i u_k <= du_i + s_i with s_i >= 0 when w_i > 0 (soft row)
 * and s_i = 0 otherwise. Stage N carries no input.
 *
 * Lagrangian sign convention (used by kkt_residuals and the solver):
 *   L = J + nu_0^T (x0 - x_0) + sum_k nu_{k+1}^T (A_k x_k + B_k u_k + b_k - x_{k+1})
 *         + lam_u^T (C x + D u - du - s) + lam_l^T (dl - C x - D u - s) - lam_s^T s
 */

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace urbanmpc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct OcpStage
{
  // dynamics to the next stage; empty on the terminal stage
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd b;

  Eigen::MatrixXd Q;
  Eigen::MatrixXd S;  ///< nx x nu
  Eigen::MatrixXd R;
  Eigen::VectorXd q;
  Eigen::VectorXd r;

  Eigen::MatrixXd C;
  Eigen::MatrixXd D;
  Eigen::VectorXd dl;
  Eigen::VectorXd du;
  Eigen::VectorXd slack_weight;  ///< > 0 marks a soft row with that L1 weight

  Eigen::Index nx() const { return Q.rows(); }
  Eigen::Index nu() const { return R.rows(); }
  Eigen::Index rows() const { return C.rows(); }
  Eigen::Index num_soft() const { return (slack_weight.array() > 0.0).count(); }

  /// Zero-initialized stage with no constraint rows.
  static OcpStage zeros(Eigen::Index nx, Eigen::Index nu, bool terminal)
  {
    OcpStage s;
    const Eigen::Index nx_next = terminal ? 0 : nx;
    s.A = Eigen::MatrixXd::Zero(nx_next, terminal ? 0 : nx);
    s.B = Eigen::MatrixXd::Zero(nx_next, nu);
    s.b = Eigen::VectorXd::Zero(nx_next);
    s.Q = Eigen::MatrixXd::Zero(nx, nx);
    s.S = Eigen::MatrixXd::Zero(nx, nu);
    s.R = Eigen::MatrixXd::Zero(nu, nu);
    s.q = Eigen::VectorXd::Zero(nx);
    s.r = Eigen::VectorXd::Zero(nu);
    s.C = Eigen::MatrixXd::Zero(0, nx);
    s.D = Eigen::MatrixXd::Zero(0, nu);
    s.dl = Eigen::VectorXd::Zero(0);
    s.du = Eigen::VectorXd::Zero(0);
    s.slack_weight = Eigen::VectorXd::Zero(0);
    return s;
  }

  /// Appends one row dl <= c^T x + d^T u <= du.
  void add_row(const Eigen::VectorXd & c, const Eigen::VectorXd & d, double lo, double hi, double weight = 0.0)
  {
    const Eigen::Index m = rows();
    C.conservativeResize(m + 1, nx());
    D.conservativeResize(m + 1, nu());
    dl.conservativeResize(m + 1);
    du.conservativeResize(m + 1);
    slack_weight.conservativeResize(m + 1);
    C.row(m) = c.transpose();
    if (nu() > 0) { D.row(m) = d.transpose(); }
    dl[m] = lo;
    du[m] = hi;
    slack_weight[m] = weight;
  }
};

struct OcpQp
{
  std::vector<OcpStage> stages;  ///< N+1 stages, the last one terminal
  Eigen::VectorXd x0;

  int horizon() const { return static_cast<int>(stages.size()) - 1; }

  /// Throws std::invalid_argument on inconsistent data or a non-convex stage cost.
  void validate() const
  {
    if (stages.size() < 2) { throw std::invalid_argument("OcpQp: need at least one stage plus terminal"); }
    const int N = horizon();
    if (x0.size() != stages[0].nx() || !x0.allFinite()) { throw std::invalid_argument("OcpQp: x0 dimension"); }
    for (int k = 0; k <= N; ++k) {
      const OcpStage & s = stages[static_cast<std::size_t>(k)];
      const std::string tag = "OcpQp stage " + std::to_string(k) + ": ";
      const Eigen::Index nx = s.nx(), nu = s.nu(), m = s.rows();
      if (s.Q.cols() != nx || s.S.rows() != nx || s.S.cols() != nu || s.R.cols() != nu || s.q.size() != nx ||
          s.r.size() != nu)
      {
        throw std::invalid_argument(tag + "cost dimensions");
      }
      if (s.C.cols() != nx || s.D.rows() != m || s.D.cols() != nu || s.dl.size() != m || s.du.size() != m ||
          s.slack_weight.size() != m)
      {
        throw std::invalid_argument(tag + "constraint dimensions");
      }
      if (k < N) {
        const Eigen::Index nx_next = stages[static_cast<std::size_t>(k) + 1].nx();
        if (s.A.rows() != nx_next || s.A.cols() != nx || s.B.rows() != nx_next || s.B.cols() != nu ||
            s.b.size() != nx_next)
        {
          throw std::invalid_argument(tag + "dynamics dimensions");
        }
      } else if (nu != 0) {
        throw std::invalid_argument(tag + "terminal stage must not have inputs");
      }
      Eigen::MatrixXd H(nx + nu, nx + nu);
      H << s.Q, s.S, s.S.transpose(), s.R;
      if (!H.allFinite() || !s.q.allFinite() || !s.r.allFinite() || !s.C.allFinite() || !s.D.allFinite()) {
        throw std::invalid_argument(tag + "non-finite data");
      }
      const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
      if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument(tag + "cost Hessian not symmetric");
      }
      if (nx + nu > 0) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
          throw std::invalid_argument(tag + "cost Hessian not positive semi-definite");
        }
      }
      if (nu > 0) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.R, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues().minCoeff() > 0.0)) { throw std::invalid_argument(tag + "R not positive definite"); }
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        if (std::isnan(s.dl[i]) || std::isnan(s.du[i]) || s.dl[i] > s.du[i]) {
          throw std::invalid_argument(tag + "row bounds must satisfy dl <= du");
        }
        if (!(s.slack_weight[i] >= 0.0) || !std::isfinite(s.slack_weight[i])) {
          throw std::invalid_argument(tag + "slack weights must be finite and >= 0");
        }
      }
    }
  }
};

enum class SolveStatus { kOptimal, kMaxIter, kNumericalFailure };

inline const char * to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max-iter";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

struct KktResiduals
{
  double stationarity{kInf};
  double primal{kInf};
  double dual{kInf};
  double complementarity{kInf};

  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

struct OcpSolution
{
  std::vector<Eigen::VectorXd> x;      ///< N+1
  std::vector<Eigen::VectorXd> u;      ///< N
  std::vector<Eigen::VectorXd> slack;  ///< N+1, one entry per row (zero on hard rows)
  std::vector<Eigen::VectorXd> nu;     ///< N+1: nu[0] initial-state, nu[k+1] dynamics k
  std::vector<Eigen::VectorXd> lam_upper;
  std::vector<Eigen::VectorXd> lam_lower;
  std::vector<Eigen::VectorXd> lam_slack;
  SolveStatus status{SolveStatus::kNumericalFailure};
  int iterations{0};
  KktResiduals residuals{};
  std::vector<double> merit_history;

  bool has_duals_for(const OcpQp & qp) const
  {
    const std::size_t n = qp.stages.size();
    if (nu.size() != n || lam_upper.size() != n || lam_lower.size() != n || lam_slack.size() != n) { return false; }
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::Index m = qp.stages[k].rows();
      if (nu[k].size() != qp.stages[k].nx() || lam_upper[k].size() != m || lam_lower[k].size() != m ||
          lam_slack[k].size() != m)
      {
        return false;
      }
    }
    return true;
  }

  bool has_primal_for(const OcpQp & qp) const
  {
    const std::size_t n = qp.stages.size();
    if (x.size() != n || u.size() + 1 != n || slack.size() != n) { return false; }
    for (std::size_t k = 0; k < n; ++k) {
      if (x[k].size() != qp.stages[k].nx() || slack[k].size() != qp.stages[k].rows()) { return false; }
      if (k + 1 < n && u[k].size() != qp.stages[k].nu()) { return false; }
    }
    return true;
  }
};

/// Zero primal and dual vectors of the right shape.
inline OcpSolution zero_solution(const OcpQp & qp)
{
  OcpSolution s;
  const std::size_t n = qp.stages.size();
  for (std::size_t k = 0; k < n; ++k) {
    const OcpStage & st = qp.stages[k];
    s.x.push_back(Eigen::VectorXd::Zero(st.nx()));
    if (k + 1 < n) { s.u.push_back(Eigen::VectorXd::Zero(st.nu())); }
    s.slack.push_back(Eigen::VectorXd::Zero(st.rows()));
    s.nu.push_back(Eigen::VectorXd::Zero(st.nx()));
    s.lam_upper.push_back(Eigen::VectorXd::Zero(st.rows()));
    s.lam_lower.push_back(Eigen::VectorXd::Zero(st.rows()));
    s.lam_slack.push_back(Eigen::VectorXd::Zero(st.rows()));
  }
  return s;
}

/// Primal objective including the L1 slack penalty.
inline double objective(const OcpQp & qp, const OcpSolution & sol)
{
  double J = 0.0;
  for (std::size_t k = 0; k < qp.stages.size(); ++k) {
    const OcpStage & s = qp.stages[k];
    const Eigen::VectorXd & x = sol.x[k];
    J += 0.5 * x.dot(s.Q * x) + s.q.dot(x);
    if (k < sol.u.size() && s.nu() > 0) {
      const Eigen::VectorXd & u = sol.u[k];
      J += x.dot(s.S * u) + 0.5 * u.dot(s.R * u) + s.r.dot(u);
    }
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      if (s.slack_weight[i] > 0.0) { J += s.slack_weight[i] * sol.slack[k][i]; }
    }
  }
  return J;
}

/// Lagrangian value at (primal, dual); equals the dual objective at a stationary point.
inline double lagrangian(const OcpQp & qp, const OcpSolution & sol)
{
  double L = objective(qp, sol);
  const std::size_t n = qp.stages.size();
  L += sol.nu[0].dot(qp.x0 - sol.x[0]);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const OcpStage & s = qp.stages[k];
    L += sol.nu[k + 1].dot(s.A * sol.x[k] + s.B * sol.u[k] + s.b - sol.x[k + 1]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const OcpStage & s = qp.stages[k];
    Eigen::VectorXd a = s.C * sol.x[k];
    if (k + 1 < n && s.nu() > 0) { a += s.D * sol.u[k]; }
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double sl = sol.slack[k][i];
      if (std::isfinite(s.du[i])) { L += sol.lam_upper[k][i] * (a[i] - s.du[i] - sl); }
      if (std::isfinite(s.dl[i])) { L += sol.lam_lower[k][i] * (s.dl[i] - a[i] - sl); }
      L -= sol.lam_slack[k][i] * sl;
    }
  }
  return L;
}

/**
 * @brief Infinity norms of the four KKT conditions, evaluated directly from the
 * problem data and the candidate (no solver state involved).
 */
inline KktResiduals kkt_residuals(const OcpQp & qp, const OcpSolution & c)
{
  KktResiduals res{0.0, 0.0, 0.0, 0.0};
  const std::size_t n = qp.stages.size();
  if (!c.has_primal_for(qp) || !c.has_duals_for(qp)) { throw std::invalid_argument("kkt_residuals: dimension mismatch"); }

  auto upd = [](double & acc, double v) { acc = std::max(acc, std::isnan(v) ? kInf : std::abs(v)); };

  upd(res.primal, (c.x[0] - qp.x0).cwiseAbs().maxCoeff());
  for (std::size_t k = 0; k < n; ++k) {
    const OcpStage & s = qp.stages[k];
    const bool has_u = k + 1 < n && s.nu() > 0;
    const Eigen::VectorXd & x = c.x[k];
    const Eigen::VectorXd lam_row = c.lam_upper[k] - c.lam_lower[k];

    Eigen::VectorXd gx = s.Q * x + s.q - c.nu[k] + s.C.transpose() * lam_row;
    if (has_u) { gx += s.S * c.u[k]; }
    if (k + 1 < n) { gx += s.A.transpose() * c.nu[k + 1]; }
    if (gx.size() > 0) { upd(res.stationarity, gx.cwiseAbs().maxCoeff()); }

    Eigen::VectorXd a = s.C * x;
    if (has_u) {
      const Eigen::VectorXd & u = c.u[k];
      const Eigen::VectorXd gu = s.S.transpose() * x + s.R * u + s.r + s.B.transpose() * c.nu[k + 1] +
                                 s.D.transpose() * lam_row;
      upd(res.stationarity, gu.cwiseAbs().maxCoeff());
      a += s.D * u;
    }
    if (k + 1 < n) {
      Eigen::VectorXd dyn = s.A * x + s.b - c.x[k + 1];
      if (s.nu() > 0) { dyn += s.B * c.u[k]; }
      if (dyn.size() > 0) { upd(res.primal, dyn.cwiseAbs().maxCoeff()); }
    }

    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const bool soft = s.slack_weight[i] > 0.0;
      const double sl = soft ? c.slack[k][i] : 0.0;
      const double lu = c.lam_upper[k][i], ll = c.lam_lower[k][i], ls = c.lam_slack[k][i];
      if (soft) {
        upd(res.stationarity, s.slack_weight[i] - lu - ll - ls);
        upd(res.primal, std::max(0.0, -sl));
        upd(res.dual, std::max(0.0, -ls));
        upd(res.complementarity, ls * sl);
      } else {
        upd(res.primal, c.slack[k][i]);
        upd(res.complementarity, ls);
      }
      upd(res.dual, std::max(0.0, -lu));
      upd(res.dual, std::max(0.0, -ll));
      if (std::isfinite(s.du[i])) {
        upd(res.primal, std::max(0.0, a[i] - s.du[i] - sl));
        upd(res.complementarity, lu * (s.du[i] + sl - a[i]));
      } else {
        upd(res.complementarity, lu);
      }
      if (std::isfinite(s.dl[i])) {
        upd(res.primal, std::max(0.0, s.dl[i] - sl - a[i]));
        upd(res.complementarity, ll * (a[i] - s.dl[i] + sl));
      } else {
        upd(res.complementarity, ll);
      }
    }
  }
  return res;
}

}  // namespace urbanmpc

#endif  // URBANMPC__OCP_QP_HPP_
