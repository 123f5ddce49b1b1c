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

#ifndef URBANMPC__QP_SOLVER_HPP_
#define URBANMPC__QP_SOLVER_HPP_

/**
 * @file
 * @brief Primal-dual interior-point solver for OcpQp.
 *
 * Every inequality (both sides of each row plus s >= 0 on soft rows) gets a
 * nonnegative slack t and multiplier lam. Each Newton system is reduced to an
 * equality-constrained LQ problem:
 *
 *   1. condense the inequalities into the stage Hessian, H + G^T diag(lam/t) G;
 *   2. eliminate the L1 slack variables stage-locally (their block is diagonal);
 *   3. solve the remaining LQ problem with a backward Riccati recursion.
 *
 * The factorization depends only on lam/t, so the Mehrotra corrector reuses it.
 * Steps are cut back until the unperturbed KKT residual norm decreases, which
 * makes the residual history monotone.
 */

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "urbanmpc/ocp_qp.hpp"

namespace urbanmpc {

struct SolverSettings
{
  double tol{1e-8};
  int max_iter{30};
  /// Predictor-corrector centering; plain primal-dual with fixed `sigma` when false.
  bool mehrotra{false};
  double sigma{0.1};
  double step_fraction{0.995};
  double initial_dual{1.0};
  double initial_slack{1.0};
};

class RiccatiIpmSolver
{
public:
  RiccatiIpmSolver() = default;
  explicit RiccatiIpmSolver(SolverSettings settings) : settings_(settings) {}

  const SolverSettings & settings() const { return settings_; }
  SolverSettings & settings() { return settings_; }

  /// Number of solve() calls made on this instance.
  long solve_count() const { return solve_count_; }

  /**
   * @brief Solves `qp`. A warm start seeds the primal iterate; its duals are only
   * used to accept it unchanged when it already satisfies the KKT conditions.
   *
   * Throws std::invalid_argument when the data fails OcpQp::validate().
   */
  OcpSolution solve(const OcpQp & qp, const OcpSolution * warm_start = nullptr)
  {
    qp.validate();
    ++solve_count_;

    if (warm_start != nullptr && warm_start->has_primal_for(qp) && warm_start->has_duals_for(qp)) {
      const KktResiduals r = kkt_residuals(qp, *warm_start);
      if (r.max() <= settings_.tol) {
        OcpSolution out = *warm_start;
        out.status = SolveStatus::kOptimal;
        out.iterations = 0;
        out.residuals = r;
        out.merit_history.clear();
        return out;
      }
    }

    setup(qp);
    initialize(qp, warm_start);

    double merit = residuals(qp);
    std::vector<double> history{merit};
    int it = 0;
    bool failed = false;
    for (;;) {
      if (converged()) {
        OcpSolution cand = extract(qp);
        cand.residuals = kkt_residuals(qp, cand);
        if (cand.residuals.max() <= settings_.tol) {
          cand.status = SolveStatus::kOptimal;
          cand.iterations = it;
          cand.merit_history = history;
          return cand;
        }
      }
      if (it >= settings_.max_iter) { break; }
      if (!factorize()) {
        failed = true;
        break;
      }
      const double mu = complementarity_mean();
      bool stepped = false;
      if (settings_.mehrotra) {
        // affine predictor
        set_comp_target(0.0, false);
        if (!direction()) {
          failed = true;
          break;
        }
        const double a_aff = max_step(1.0);
        const double mu_aff = complementarity_mean_after(a_aff);
        const double sig = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
        set_comp_target(std::min(1.0, sig) * mu, true);
        if (!direction()) {
          failed = true;
          break;
        }
        stepped = line_search(merit);
      }
      if (!stepped) {
        set_comp_target(settings_.sigma * mu, false);
        if (!direction()) {
          failed = true;
          break;
        }
        stepped = line_search(merit);
      }
      if (!stepped) {
        failed = true;
        break;
      }
      ++it;
      merit = residuals(qp);
      history.push_back(merit);
      if (!std::isfinite(merit)) {
        failed = true;
        break;
      }
    }

    OcpSolution out = extract(qp);
    out.iterations = it;
    out.merit_history = history;
    out.residuals = kkt_residuals(qp, out);
    out.status = failed ? SolveStatus::kNumericalFailure : SolveStatus::kMaxIter;
    return out;
  }

private:
  enum class IneqKind : unsigned char { kUpper, kLower, kSlack };

  struct StageWork
  {
    Eigen::Index nx{0}, nu{0}, ns{0}, mi{0};
    Eigen::MatrixXd G;  // mi x nz
    Eigen::VectorXd h;
    std::vector<Eigen::Index> src;     // source constraint row of each inequality
    std::vector<IneqKind> kind;
    std::vector<Eigen::Index> slot;    // slack slot per constraint row, -1 for hard rows
    Eigen::MatrixXd H;
    Eigen::VectorXd g;

    Eigen::VectorXd z, lam, t;
    Eigen::VectorXd rd, ri, rc;
    Eigen::VectorXd dz, dlam, dt;

    Eigen::MatrixXd Ht;
    Eigen::VectorXd dss_inv;     // inverse of the diagonal slack block
    Eigen::MatrixXd cross;       // Ht_{xu,s} * dss_inv
    Eigen::MatrixXd M;           // reduced (x,u) Hessian
    Eigen::MatrixXd P, K, Ge;
    Eigen::LLT<Eigen::MatrixXd> re_llt;
    Eigen::VectorXd p, kff, rt;

    Eigen::Index nz() const { return nx + nu + ns; }
  };

  void setup(const OcpQp & qp)
  {
    const std::size_t n = qp.stages.size();
    work_.resize(n);
    stage_ptr_.clear();
    for (const OcpStage & s : qp.stages) { stage_ptr_.push_back(&s); }
    nu_.assign(n, Eigen::VectorXd());
    dnu_.assign(n, Eigen::VectorXd());
    re_.assign(n, Eigen::VectorXd());
    for (std::size_t k = 0; k < n; ++k) {
      const OcpStage & s = qp.stages[k];
      StageWork & w = work_[k];
      w.nx = s.nx();
      w.nu = k + 1 < n ? s.nu() : 0;
      w.ns = s.num_soft();
      const Eigen::Index nz = w.nz();

      w.slot.assign(static_cast<std::size_t>(s.rows()), -1);
      Eigen::Index next_slot = 0;
      w.src.clear();
      w.kind.clear();
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const bool soft = s.slack_weight[i] > 0.0;
        if (soft) { w.slot[static_cast<std::size_t>(i)] = next_slot++; }
        if (std::isfinite(s.du[i])) { w.src.push_back(i), w.kind.push_back(IneqKind::kUpper); }
        if (std::isfinite(s.dl[i])) { w.src.push_back(i), w.kind.push_back(IneqKind::kLower); }
        if (soft) { w.src.push_back(i), w.kind.push_back(IneqKind::kSlack); }
      }
      w.mi = static_cast<Eigen::Index>(w.src.size());
      w.G = Eigen::MatrixXd::Zero(w.mi, nz);
      w.h = Eigen::VectorXd::Zero(w.mi);
      for (Eigen::Index j = 0; j < w.mi; ++j) {
        const Eigen::Index i = w.src[static_cast<std::size_t>(j)];
        const Eigen::Index sl = w.slot[static_cast<std::size_t>(i)];
        switch (w.kind[static_cast<std::size_t>(j)]) {
          case IneqKind::kUpper:
            w.G.row(j).head(w.nx) = s.C.row(i);
            if (w.nu > 0) { w.G.row(j).segment(w.nx, w.nu) = s.D.row(i); }
            w.h[j] = s.du[i];
            break;
          case IneqKind::kLower:
            w.G.row(j).head(w.nx) = -s.C.row(i);
            if (w.nu > 0) { w.G.row(j).segment(w.nx, w.nu) = -s.D.row(i); }
            w.h[j] = -s.dl[i];
            break;
          case IneqKind::kSlack: break;
        }
        if (sl >= 0) { w.G(j, w.nx + w.nu + sl) = -1.0; }
      }

      w.H = Eigen::MatrixXd::Zero(nz, nz);
      w.H.topLeftCorner(w.nx, w.nx) = s.Q;
      w.g = Eigen::VectorXd::Zero(nz);
      w.g.head(w.nx) = s.q;
      if (w.nu > 0) {
        w.H.block(0, w.nx, w.nx, w.nu) = s.S;
        w.H.block(w.nx, 0, w.nu, w.nx) = s.S.transpose();
        w.H.block(w.nx, w.nx, w.nu, w.nu) = s.R;
        w.g.segment(w.nx, w.nu) = s.r;
      }
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Eigen::Index sl = w.slot[static_cast<std::size_t>(i)];
        if (sl >= 0) { w.g[w.nx + w.nu + sl] = s.slack_weight[i]; }
      }
      nu_[k] = Eigen::VectorXd::Zero(w.nx);
      dnu_[k] = Eigen::VectorXd::Zero(w.nx);
    }
  }

  void initialize(const OcpQp & qp, const OcpSolution * warm)
  {
    const std::size_t n = qp.stages.size();
    const bool use_warm = warm != nullptr && warm->has_primal_for(qp);
    for (std::size_t k = 0; k < n; ++k) {
      const OcpStage & s = qp.stages[k];
      StageWork & w = work_[k];
      w.z = Eigen::VectorXd::Zero(w.nz());
      if (use_warm) {
        w.z.head(w.nx) = warm->x[k];
        if (w.nu > 0) { w.z.segment(w.nx, w.nu) = warm->u[k]; }
      } else if (k == 0) {
        w.z.head(w.nx) = qp.x0;
      }
      // soft rows: the slack starts just above the current violation and its
      // bound multiplier takes the L1 weight, so slack stationarity holds and
      // the slack complementarity product starts at the row's violation scale
      Eigen::VectorXd a = s.C * w.z.head(w.nx);
      if (w.nu > 0) { a += s.D * w.z.segment(w.nx, w.nu); }
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Eigen::Index sl = w.slot[static_cast<std::size_t>(i)];
        if (sl < 0) { continue; }
        double viol = 0.0;
        if (std::isfinite(s.du[i])) { viol = std::max(viol, a[i] - s.du[i]); }
        if (std::isfinite(s.dl[i])) { viol = std::max(viol, s.dl[i] - a[i]); }
        w.z[w.nx + w.nu + sl] = viol + settings_.initial_slack / std::max(1.0, s.slack_weight[i]);
      }
      w.t = (w.h - w.G * w.z).cwiseMax(settings_.initial_slack);
      w.lam = Eigen::VectorXd::Constant(w.mi, settings_.initial_dual);
      for (Eigen::Index j = 0; j < w.mi; ++j) {
        if (w.kind[static_cast<std::size_t>(j)] != IneqKind::kSlack) { continue; }
        const Eigen::Index i = w.src[static_cast<std::size_t>(j)];
        const double sides = (std::isfinite(s.du[i]) ? 1.0 : 0.0) + (std::isfinite(s.dl[i]) ? 1.0 : 0.0);
        w.t[j] = w.z[w.nx + w.nu + w.slot[static_cast<std::size_t>(i)]];
        w.lam[j] = std::max(settings_.initial_dual, s.slack_weight[i] - sides * settings_.initial_dual);
      }
      nu_[k].setZero();
    }
  }

  /// Recomputes rd, re, ri and returns the unperturbed residual 2-norm.
  double residuals(const OcpQp & qp)
  {
    const std::size_t n = qp.stages.size();
    double sq = 0.0;
    re_[0] = qp.x0 - work_[0].z.head(work_[0].nx);
    sq += re_[0].squaredNorm();
    for (std::size_t k = 0; k < n; ++k) {
      const OcpStage & s = qp.stages[k];
      StageWork & w = work_[k];
      w.rd = w.H * w.z + w.g + w.G.transpose() * w.lam;
      w.rd.head(w.nx) -= nu_[k];
      if (k + 1 < n) {
        w.rd.head(w.nx) += s.A.transpose() * nu_[k + 1];
        if (w.nu > 0) { w.rd.segment(w.nx, w.nu) += s.B.transpose() * nu_[k + 1]; }
        Eigen::VectorXd dyn = s.A * w.z.head(w.nx) + s.b - work_[k + 1].z.head(work_[k + 1].nx);
        if (w.nu > 0) { dyn += s.B * w.z.segment(w.nx, w.nu); }
        re_[k + 1] = dyn;
        sq += dyn.squaredNorm();
      }
      w.ri = w.G * w.z + w.t - w.h;
      sq += w.rd.squaredNorm() + w.ri.squaredNorm() + w.lam.cwiseProduct(w.t).squaredNorm();
    }
    return std::sqrt(sq);
  }

  bool converged() const
  {
    const double tol = settings_.tol;
    for (std::size_t k = 0; k < work_.size(); ++k) {
      const StageWork & w = work_[k];
      if (re_[k].size() > 0 && re_[k].cwiseAbs().maxCoeff() > tol) { return false; }
      if (w.rd.size() > 0 && w.rd.cwiseAbs().maxCoeff() > tol) { return false; }
      if (w.mi > 0) {
        if (w.ri.cwiseAbs().maxCoeff() > tol) { return false; }
        if (w.lam.cwiseProduct(w.t).maxCoeff() > tol) { return false; }
      }
    }
    return true;
  }

  double complementarity_mean() const
  {
    double sum = 0.0;
    Eigen::Index m = 0;
    for (const StageWork & w : work_) {
      sum += w.lam.dot(w.t);
      m += w.mi;
    }
    return m > 0 ? sum / static_cast<double>(m) : 0.0;
  }

  double complementarity_mean_after(double alpha) const
  {
    double sum = 0.0;
    Eigen::Index m = 0;
    for (const StageWork & w : work_) {
      sum += (w.lam + alpha * w.dlam).dot(w.t + alpha * w.dt);
      m += w.mi;
    }
    return m > 0 ? sum / static_cast<double>(m) : 0.0;
  }

  /// rc = lam .* t - target (+ second-order affine term for the corrector).
  void set_comp_target(double target, bool corrector)
  {
    for (StageWork & w : work_) {
      w.rc = w.lam.cwiseProduct(w.t).array() - target;
      if (corrector) { w.rc += w.dlam.cwiseProduct(w.dt); }
    }
  }

  bool factorize()
  {
    const std::size_t n = work_.size();
    for (std::size_t k = 0; k < n; ++k) {
      StageWork & w = work_[k];
      const Eigen::VectorXd d = w.lam.cwiseQuotient(w.t);
      w.Ht = w.H;
      if (w.mi > 0) { w.Ht.noalias() += w.G.transpose() * d.asDiagonal() * w.G; }
      const Eigen::Index nxu = w.nx + w.nu;
      w.dss_inv = w.Ht.diagonal().tail(w.ns).cwiseInverse();
      if (!w.dss_inv.allFinite()) { return false; }
      w.cross = w.Ht.topRightCorner(nxu, w.ns) * w.dss_inv.asDiagonal();
      w.M = w.Ht.topLeftCorner(nxu, nxu);
      w.M.noalias() -= w.cross * w.Ht.bottomLeftCorner(w.ns, nxu);
      if (!w.M.allFinite()) { return false; }
    }

    StageWork & last = work_[n - 1];
    last.P = 0.5 * (last.M + last.M.transpose());
    for (std::size_t kk = n - 1; kk-- > 0;) {
      StageWork & w = work_[kk];
      const OcpStage & s = *stage_ptr_[kk];
      const Eigen::MatrixXd & Pn = work_[kk + 1].P;
      const Eigen::MatrixXd PA = Pn * s.A;
      Eigen::MatrixXd Pk = w.M.topLeftCorner(w.nx, w.nx) + s.A.transpose() * PA;
      if (w.nu > 0) {
        const Eigen::MatrixXd PB = Pn * s.B;
        Eigen::MatrixXd Re = w.M.bottomRightCorner(w.nu, w.nu) + s.B.transpose() * PB;
        Re = 0.5 * (Re + Re.transpose()).eval();
        w.Ge = w.M.bottomLeftCorner(w.nu, w.nx) + s.B.transpose() * PA;
        w.re_llt.compute(Re);
        if (w.re_llt.info() != Eigen::Success) { return false; }
        w.K = -w.re_llt.solve(w.Ge);
        Pk.noalias() += w.Ge.transpose() * w.K;
      } else {
        w.Ge.resize(0, w.nx);
        w.K.resize(0, w.nx);
      }
      w.P = 0.5 * (Pk + Pk.transpose());
      if (!w.P.allFinite()) { return false; }
    }
    return true;
  }

  /// Newton direction for the current rc, reusing the factorization.
  bool direction()
  {
    const std::size_t n = work_.size();
    for (StageWork & w : work_) {
      const Eigen::Index nxu = w.nx + w.nu;
      w.rt = w.rd;
      if (w.mi > 0) {
        const Eigen::VectorXd v = (w.lam.cwiseProduct(w.ri) - w.rc).cwiseQuotient(w.t);
        w.rt.noalias() += w.G.transpose() * v;
      }
      // reduced gradient after slack elimination stored in p temporarily
      w.p = w.rt.head(nxu);
      if (w.ns > 0) { w.p.noalias() -= w.cross * w.rt.tail(w.ns); }
    }

    // backward sweep: p_k and feedforward terms
    StageWork & last = work_[n - 1];
    Eigen::VectorXd p_next = last.p.head(last.nx);
    last.p = p_next;
    for (std::size_t kk = n - 1; kk-- > 0;) {
      StageWork & w = work_[kk];
      const OcpStage & s = *stage_ptr_[kk];
      const Eigen::VectorXd pe = work_[kk + 1].P * re_[kk + 1] + p_next;
      Eigen::VectorXd pk = w.p.head(w.nx) + s.A.transpose() * pe;
      if (w.nu > 0) {
        const Eigen::VectorXd ge = w.p.tail(w.nu) + s.B.transpose() * pe;
        w.kff = -w.re_llt.solve(ge);
        pk.noalias() += w.Ge.transpose() * w.kff;
      } else {
        w.kff.resize(0);
      }
      p_next = pk;
      w.p = pk;
    }

    // forward sweep
    Eigen::VectorXd dx = re_[0];
    for (std::size_t k = 0; k < n; ++k) {
      StageWork & w = work_[k];
      const Eigen::Index nxu = w.nx + w.nu;
      w.dz.resize(w.nz());
      w.dz.head(w.nx) = dx;
      dnu_[k] = w.P * dx + w.p;
      if (k + 1 < n) {
        const OcpStage & s = *stage_ptr_[k];
        Eigen::VectorXd next = s.A * dx + re_[k + 1];
        if (w.nu > 0) {
          const Eigen::VectorXd du = w.K * dx + w.kff;
          w.dz.segment(w.nx, w.nu) = du;
          next.noalias() += s.B * du;
        }
        dx = next;
      }
      if (w.ns > 0) {
        w.dz.tail(w.ns) = -(w.dss_inv.cwiseProduct(
          w.rt.tail(w.ns) + w.Ht.bottomLeftCorner(w.ns, nxu) * w.dz.head(nxu)));
      }
      if (w.mi > 0) {
        const Eigen::VectorXd gdz = w.G * w.dz;
        w.dt = -w.ri - gdz;
        w.dlam = (w.lam.cwiseProduct(w.ri + gdz) - w.rc).cwiseQuotient(w.t);
      } else {
        w.dt.resize(0);
        w.dlam.resize(0);
      }
      if (!w.dz.allFinite() || !w.dlam.allFinite()) { return false; }
    }
    return true;
  }

  double max_step(double tau) const
  {
    double alpha = 1.0;
    for (const StageWork & w : work_) {
      for (Eigen::Index j = 0; j < w.mi; ++j) {
        if (w.dt[j] < 0.0) { alpha = std::min(alpha, -tau * w.t[j] / w.dt[j]); }
        if (w.dlam[j] < 0.0) { alpha = std::min(alpha, -tau * w.lam[j] / w.dlam[j]); }
      }
    }
    return alpha;
  }

  /// Backtracks until the KKT residual norm decreases, then applies the step.
  bool line_search(double merit0)
  {
    double lin_sq = 0.0;
    for (std::size_t k = 0; k < work_.size(); ++k) {
      lin_sq += re_[k].squaredNorm() + work_[k].rd.squaredNorm() + work_[k].ri.squaredNorm();
    }
    double alpha = max_step(settings_.step_fraction);
    for (int trial = 0; trial < 40; ++trial) {
      double sq = (1.0 - alpha) * (1.0 - alpha) * lin_sq;
      for (const StageWork & w : work_) {
        sq += (w.lam + alpha * w.dlam).cwiseProduct(w.t + alpha * w.dt).squaredNorm();
      }
      if (std::sqrt(sq) <= (1.0 - 1e-4 * alpha) * merit0) {
        for (std::size_t k = 0; k < work_.size(); ++k) {
          StageWork & w = work_[k];
          w.z += alpha * w.dz;
          w.t += alpha * w.dt;
          w.lam += alpha * w.dlam;
          nu_[k] += alpha * dnu_[k];
        }
        return true;
      }
      alpha *= 0.5;
    }
    return false;
  }

  OcpSolution extract(const OcpQp & qp) const
  {
    OcpSolution out = zero_solution(qp);
    for (std::size_t k = 0; k < work_.size(); ++k) {
      const StageWork & w = work_[k];
      const OcpStage & s = qp.stages[k];
      out.x[k] = w.z.head(w.nx);
      if (k + 1 < work_.size()) { out.u[k] = w.z.segment(w.nx, w.nu); }
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Eigen::Index sl = w.slot[static_cast<std::size_t>(i)];
        if (sl >= 0) { out.slack[k][i] = w.z[w.nx + w.nu + sl]; }
      }
      for (Eigen::Index j = 0; j < w.mi; ++j) {
        const Eigen::Index i = w.src[static_cast<std::size_t>(j)];
        switch (w.kind[static_cast<std::size_t>(j)]) {
          case IneqKind::kUpper: out.lam_upper[k][i] = w.lam[j]; break;
          case IneqKind::kLower: out.lam_lower[k][i] = w.lam[j]; break;
          case IneqKind::kSlack: out.lam_slack[k][i] = w.lam[j]; break;
        }
      }
      out.nu[k] = nu_[k];
    }
    return out;
  }

  SolverSettings settings_{};
  long solve_count_{0};
  std::vector<StageWork> work_;
  std::vector<const OcpStage *> stage_ptr_;
  std::vector<Eigen::VectorXd> nu_, dnu_, re_;
};

}  // namespace urbanmpc

#endif  // URBANMPC__QP_SOLVER_HPP_
