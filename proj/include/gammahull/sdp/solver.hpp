#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gammahull/sdp/problem.hpp"

namespace gammahull::sdp {

struct SolverOptions {
  double gap_tol = 1e-9;
  double feas_tol = 1e-9;
  int max_iter = 200;
  double feas_margin = 1e-7;
  int max_dense_dim = 512;
  double step_fraction = 0.95;
};

namespace detail {

struct Term {
  int row;
  int col;
  double value;
};

struct VarTerms {
  int var;  // 0-based variable index
  std::vector<Term> terms;
};

struct WorkBlock {
  int dim = 0;
  bool diagonal = false;
  Eigen::MatrixXd F0;  // k x k, or k x 1 for diagonal blocks
  std::vector<VarTerms> vars;
};

inline std::vector<WorkBlock> build_blocks(const SdpProblem& prob) {
  const int nb = prob.num_blocks();
  std::vector<WorkBlock> blocks(nb);
  std::vector<std::map<int, std::map<std::pair<int, int>, double>>> acc(nb);
  for (int b = 0; b < nb; ++b) {
    blocks[b].dim = prob.block_size(b);
    blocks[b].diagonal = prob.is_diagonal(b);
    blocks[b].F0 = blocks[b].diagonal ? Eigen::MatrixXd::Zero(blocks[b].dim, 1)
                                      : Eigen::MatrixXd::Zero(blocks[b].dim, blocks[b].dim);
  }
  for (const auto& e : prob.entries) {
    if (e.var == 0) {
      auto& F0 = blocks[e.block].F0;
      if (blocks[e.block].diagonal) {
        F0(e.row, 0) += e.value;
      } else {
        F0(e.row, e.col) += e.value;
        if (e.row != e.col) F0(e.col, e.row) += e.value;
      }
    } else {
      acc[e.block][e.var - 1][{e.row, e.col}] += e.value;
    }
  }
  for (int b = 0; b < nb; ++b) {
    for (auto& [var, m] : acc[b]) {
      VarTerms vt{var, {}};
      for (auto& [rc, v] : m)
        if (v != 0.0) vt.terms.push_back({rc.first, rc.second, v});
      if (!vt.terms.empty()) blocks[b].vars.push_back(std::move(vt));
    }
  }
  if (prob.box) {
    WorkBlock box;
    box.dim = 2 * prob.num_vars;
    box.diagonal = true;
    box.F0 = Eigen::MatrixXd::Zero(box.dim, 1);
    for (int i = 0; i < prob.num_vars; ++i) {
      box.F0(2 * i, 0) = -prob.box->lower(i);
      box.F0(2 * i + 1, 0) = prob.box->upper(i);
      box.vars.push_back({i, {{2 * i, 2 * i, 1.0}, {2 * i + 1, 2 * i + 1, -1.0}}});
    }
    if (box.dim > 0) blocks.push_back(std::move(box));
  }
  return blocks;
}

inline double inner(const WorkBlock& blk, const std::vector<Term>& terms, const Eigen::MatrixXd& T) {
  double s = 0.0;
  if (blk.diagonal) {
    for (const auto& t : terms) s += t.value * T(t.row, 0);
  } else {
    for (const auto& t : terms) s += t.value * (t.row == t.col ? T(t.row, t.col) : T(t.row, t.col) + T(t.col, t.row));
  }
  return s;
}

inline void accumulate(const WorkBlock& blk, const std::vector<Term>& terms, double scale, Eigen::MatrixXd& T) {
  if (blk.diagonal) {
    for (const auto& t : terms) T(t.row, 0) += scale * t.value;
  } else {
    for (const auto& t : terms) {
      T(t.row, t.col) += scale * t.value;
      if (t.row != t.col) T(t.col, t.row) += scale * t.value;
    }
  }
}

inline double block_inner(const WorkBlock& blk, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  (void)blk;
  return (A.array() * B.array()).sum();
}

inline Eigen::MatrixXd affine_value(const WorkBlock& blk, const Eigen::VectorXd& y) {
  Eigen::MatrixXd S = blk.F0;
  for (const auto& vt : blk.vars) accumulate(blk, vt.terms, y(vt.var), S);
  return S;
}

// Nesterov-Todd scaling data for one block.
struct Scaling {
  Eigen::MatrixXd G;  // dense blocks: W = G G^T, G^T S G = diag(v)
  Eigen::MatrixXd W;
  Eigen::VectorXd v;
  Eigen::VectorXd w;  // diagonal blocks: sqrt(x/s)
};

inline bool compute_scaling(const WorkBlock& blk, const Eigen::MatrixXd& S, const Eigen::MatrixXd& X, Scaling& sc) {
  if (blk.diagonal) {
    if ((S.array() <= 0).any() || (X.array() <= 0).any()) return false;
    sc.w = (X.array() / S.array()).sqrt().matrix().col(0);
    sc.v = (X.array() * S.array()).sqrt().matrix().col(0);
    return true;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return false;
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd LtSL = L.transpose() * S * L;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (LtSL + LtSL.transpose()));
  if (es.info() != Eigen::Success) return false;
  Eigen::VectorXd lam = es.eigenvalues();
  if (!(lam.minCoeff() > 0.0)) return false;
  Eigen::VectorXd q = lam.array().pow(-0.25);
  sc.G = L * es.eigenvectors() * q.asDiagonal();
  sc.W = sc.G * sc.G.transpose();
  sc.v = lam.array().sqrt();
  return true;
}

// Largest alpha with V + alpha * dT >= 0 (scaled space, V diagonal positive).
inline double max_step_scaled(const Eigen::VectorXd& v, const Eigen::MatrixXd& dT) {
  Eigen::VectorXd isq = v.array().rsqrt();
  Eigen::MatrixXd P = isq.asDiagonal() * dT * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline double max_step_diag(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (dx(i, 0) < 0) a = std::min(a, -x(i, 0) / dx(i, 0));
  return a;
}

struct Direction {
  Eigen::VectorXd dy;
  std::vector<Eigen::MatrixXd> dS, dX, dSt, dXt;  // scaled versions for dense blocks
};

}  // namespace detail

class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(SolverOptions opt = {}) : opt_(opt) {}

  SdpSolution solve(const SdpProblem& prob) const {
    prob.validate();
    if (prob.total_dense_dim() > opt_.max_dense_dim)
      throw std::invalid_argument("SDP: total block dimension " + std::to_string(prob.total_dense_dim()) +
                                  " exceeds cap " + std::to_string(opt_.max_dense_dim));
    using namespace detail;
    const int m = prob.num_vars;
    const Eigen::VectorXd& c = prob.objective;
    std::vector<WorkBlock> blocks = build_blocks(prob);
    const int nb = static_cast<int>(blocks.size());

    SdpSolution sol;
    if (nb == 0) {
      sol.message = "no constraint blocks";
      sol.y = Eigen::VectorXd::Zero(m);
      sol.status = c.isZero(0.0) ? Status::optimal : Status::unbounded;
      return sol;
    }

    double total_dim = 0, normF0 = 0, maxFi = 0;
    for (const auto& b : blocks) {
      total_dim += b.dim;
      normF0 += b.F0.squaredNorm() * (b.diagonal ? 1.0 : 1.0);
    }
    normF0 = std::sqrt(normF0);
    std::vector<double> normFi(m, 0.0);
    for (const auto& b : blocks)
      for (const auto& vt : b.vars)
        for (const auto& t : vt.terms)
          normFi[vt.var] += t.value * t.value * ((!b.diagonal && t.row != t.col) ? 2.0 : 1.0);
    double alpha0 = 1.0;
    for (int i = 0; i < m; ++i) {
      normFi[i] = std::sqrt(normFi[i]);
      maxFi = std::max(maxFi, normFi[i]);
      alpha0 = std::max(alpha0, (1.0 + std::abs(c(i))) / (1.0 + normFi[i]));
    }
    const double xi_x = 10.0 * std::sqrt(total_dim) * alpha0;
    const double xi_s = 10.0 * (1.0 + std::max(normF0, maxFi)) / std::sqrt(total_dim);

    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::MatrixXd> S(nb), X(nb);
    for (int b = 0; b < nb; ++b) {
      const auto& B = blocks[b];
      if (B.diagonal) {
        S[b] = Eigen::MatrixXd::Constant(B.dim, 1, xi_s);
        X[b] = Eigen::MatrixXd::Constant(B.dim, 1, xi_x);
      } else {
        S[b] = xi_s * Eigen::MatrixXd::Identity(B.dim, B.dim);
        X[b] = xi_x * Eigen::MatrixXd::Identity(B.dim, B.dim);
      }
    }

    const double cnorm = c.norm();
    int stall = 0;
    std::vector<Eigen::MatrixXd> Rd(nb);
    Eigen::VectorXd rp(m);
    std::vector<Scaling> sc(nb);

    for (int it = 0;; ++it) {
      // Residuals and measures.
      double rd2 = 0, gapsum = 0;
      for (int b = 0; b < nb; ++b) {
        Rd[b] = affine_value(blocks[b], y) - S[b];
        rd2 += Rd[b].squaredNorm();
        gapsum += block_inner(blocks[b], S[b], X[b]);
      }
      rp = -c;
      for (int b = 0; b < nb; ++b)
        for (const auto& vt : blocks[b].vars) rp(vt.var) -= inner(blocks[b], vt.terms, X[b]);
      double dobj = 0;
      for (int b = 0; b < nb; ++b) dobj += block_inner(blocks[b], blocks[b].F0, X[b]);
      const double pobj = c.dot(y);
      const double mu = gapsum / total_dim;
      const double pinf = std::sqrt(rd2) / (1.0 + normF0);
      const double dinf = rp.norm() / (1.0 + cnorm);
      const double relgap = std::abs(dobj - pobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

      sol.iterations = it;
      auto finish = [&](Status st, std::string msg) {
        sol.status = st;
        sol.message = std::move(msg);
        sol.y = y;
        sol.objective_value = pobj;
        sol.dual_objective = dobj;
        sol.duality_gap = dobj - pobj;
        sol.dual_residual = rp;
        sol.primal_matrix.clear();
        sol.dual_matrix.clear();
        for (int b = 0; b < nb; ++b) {
          sol.primal_matrix.push_back(affine_value(blocks[b], y));
          sol.dual_matrix.push_back(X[b]);
        }
        sol.max_constraint_residual = std::max(std::sqrt(rd2), rp.size() ? rp.cwiseAbs().maxCoeff() : 0.0);
        return sol;
      };

      if (!std::isfinite(mu) || !std::isfinite(pobj) || !std::isfinite(dobj))
        return finish(Status::indeterminate, "numerical breakdown (non-finite iterate)");
      if (pinf <= opt_.feas_tol && dinf <= opt_.feas_tol && relgap <= opt_.gap_tol)
        return finish(Status::optimal, "converged");

      // Farkas ray for the y-problem: X >= 0, <F_i,X> ~ 0, <F0,X> < 0.
      if (dobj < 0) {
        double ray = 0;
        for (int i = 0; i < m; ++i) ray = std::max(ray, std::abs(rp(i) + c(i)));
        ray /= -dobj;
        if (ray <= 1e-9 * (1.0 + maxFi) && -dobj > 1e-6 * (1.0 + std::abs(pobj))) {
          BlockMatrix fx;
          for (int b = 0; b < nb; ++b) fx.push_back(X[b] / (-dobj));
          sol.farkas = std::move(fx);
          return finish(Status::infeasible_certified, "dual improving ray found");
        }
      }
      if (pinf <= 1e-8 && pobj > 1e10 * (1.0 + std::abs(dobj)))
        return finish(Status::unbounded, "objective diverges on feasible iterates");
      if (it >= opt_.max_iter) return finish(Status::indeterminate, "iteration limit reached");
      if (stall >= 4) return finish(Status::indeterminate, "stalled (step lengths vanished)");

      bool ok = true;
      for (int b = 0; b < nb && ok; ++b) ok = compute_scaling(blocks[b], S[b], X[b], sc[b]);
      if (!ok) return finish(Status::indeterminate, "numerical breakdown (scaling)");

      // Schur complement M_ij = <F_i, W F_j W>.
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
      for (int b = 0; b < nb; ++b) {
        const auto& B = blocks[b];
        if (B.diagonal) {
          Eigen::VectorXd w2 = sc[b].w.array().square();
          // Group coefficients by row.
          std::vector<std::vector<std::pair<int, double>>> rows(B.dim);
          for (const auto& vt : B.vars)
            for (const auto& t : vt.terms) rows[t.row].push_back({vt.var, t.value});
          for (int r = 0; r < B.dim; ++r)
            for (const auto& [i, ai] : rows[r])
              for (const auto& [j, aj] : rows[r])
                if (i >= j) M(i, j) += w2(r) * ai * aj;
          continue;
        }
        const auto& W = sc[b].W;
        const int k = B.dim;
        Eigen::MatrixXd Gj(k, k);
        for (std::size_t jj = 0; jj < B.vars.size(); ++jj) {
          const auto& tj = B.vars[jj].terms;
          if (static_cast<int>(tj.size()) * 2 < k) {
            Gj.setZero();
            for (const auto& t : tj) {
              Gj.noalias() += t.value * W.col(t.row) * W.col(t.col).transpose();
              if (t.row != t.col) Gj.noalias() += t.value * W.col(t.col) * W.col(t.row).transpose();
            }
          } else {
            Eigen::MatrixXd F = Eigen::MatrixXd::Zero(k, k);
            accumulate(B, tj, 1.0, F);
            Gj.noalias() = W * F * W;
          }
          const int j = B.vars[jj].var;
          for (std::size_t ii = jj; ii < B.vars.size(); ++ii)
            M(B.vars[ii].var, j) += inner(B, B.vars[ii].terms, Gj);
        }
      }
      M.triangularView<Eigen::StrictlyUpper>() = M.transpose().triangularView<Eigen::StrictlyUpper>();
      Eigen::LDLT<Eigen::MatrixXd> fact;
      {
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        if (llt.info() == Eigen::Success) {
          fact.compute(M);
        } else {
          const double reg = 1e-12 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
          fact.compute(M + reg * Eigen::MatrixXd::Identity(m, m));
        }
        if (fact.info() != Eigen::Success) return finish(Status::indeterminate, "numerical breakdown (Schur factorization)");
      }

      // Direction for a given scaled right-hand side Rt (per block).
      auto direction = [&](const std::vector<Eigen::MatrixXd>& Rt) {
        Direction dir;
        std::vector<Eigen::MatrixXd> D(nb), GDG(nb);
        Eigen::VectorXd rhs = -rp;
        for (int b = 0; b < nb; ++b) {
          const auto& B = blocks[b];
          Eigen::MatrixXd T;
          if (B.diagonal) {
            D[b] = (Rt[b].array() / (2.0 * sc[b].v.array())).matrix();
            GDG[b] = (sc[b].w.array() * D[b].col(0).array()).matrix();
            T = GDG[b] - (sc[b].w.array().square() * Rd[b].col(0).array()).matrix();
          } else {
            const auto& v = sc[b].v;
            D[b].resize(B.dim, B.dim);
            for (int a = 0; a < B.dim; ++a)
              for (int e = 0; e < B.dim; ++e) D[b](a, e) = Rt[b](a, e) / (v(a) + v(e));
            GDG[b] = sc[b].G * D[b] * sc[b].G.transpose();
            T = GDG[b] - sc[b].W * Rd[b] * sc[b].W;
          }
          for (const auto& vt : B.vars) rhs(vt.var) += inner(B, vt.terms, T);
        }
        dir.dy = m ? Eigen::VectorXd(fact.solve(rhs)) : Eigen::VectorXd();
        dir.dS.resize(nb);
        dir.dX.resize(nb);
        dir.dSt.resize(nb);
        dir.dXt.resize(nb);
        for (int b = 0; b < nb; ++b) {
          const auto& B = blocks[b];
          dir.dS[b] = Rd[b];
          for (const auto& vt : B.vars) accumulate(B, vt.terms, dir.dy(vt.var), dir.dS[b]);
          if (B.diagonal) {
            dir.dX[b] = GDG[b] - (sc[b].w.array().square() * dir.dS[b].col(0).array()).matrix();
            dir.dSt[b] = (sc[b].w.array() * dir.dS[b].col(0).array()).matrix();
            dir.dXt[b] = D[b] - dir.dSt[b];
          } else {
            Eigen::MatrixXd dX = GDG[b] - sc[b].W * dir.dS[b] * sc[b].W;
            dir.dX[b] = 0.5 * (dX + dX.transpose());
            Eigen::MatrixXd dSt = sc[b].G.transpose() * dir.dS[b] * sc[b].G;
            dir.dSt[b] = 0.5 * (dSt + dSt.transpose());
            dir.dXt[b] = D[b] - dir.dSt[b];
            dir.dXt[b] = 0.5 * (dir.dXt[b] + dir.dXt[b].transpose());
          }
        }
        return dir;
      };
      auto steps = [&](const Direction& dir) {
        double as = std::numeric_limits<double>::infinity(), ax = as;
        for (int b = 0; b < nb; ++b) {
          if (blocks[b].diagonal) {
            as = std::min(as, max_step_diag(S[b], dir.dS[b]));
            ax = std::min(ax, max_step_diag(X[b], dir.dX[b]));
          } else {
            as = std::min(as, max_step_scaled(sc[b].v, dir.dSt[b]));
            ax = std::min(ax, max_step_scaled(sc[b].v, dir.dXt[b]));
          }
        }
        return std::pair<double, double>(as, ax);
      };

      std::vector<Eigen::MatrixXd> Rt(nb);
      for (int b = 0; b < nb; ++b) {
        const auto& v = sc[b].v;
        if (blocks[b].diagonal) Rt[b] = (-2.0 * v.array().square()).matrix();
        else Rt[b] = Eigen::MatrixXd((-2.0 * v.array().square()).matrix().asDiagonal());
      }
      Direction pred = direction(Rt);
      auto [as_p, ax_p] = steps(pred);
      as_p = std::min(1.0, as_p);
      ax_p = std::min(1.0, ax_p);
      double mu_aff = 0;
      for (int b = 0; b < nb; ++b)
        mu_aff += block_inner(blocks[b], S[b] + as_p * pred.dS[b], X[b] + ax_p * pred.dX[b]);
      mu_aff /= total_dim;
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

      for (int b = 0; b < nb; ++b) {
        const auto& v = sc[b].v;
        if (blocks[b].diagonal) {
          Rt[b] = (2.0 * sigma * mu - 2.0 * v.array().square() -
                   2.0 * pred.dXt[b].col(0).array() * pred.dSt[b].col(0).array())
                      .matrix();
        } else {
          Eigen::MatrixXd cross = pred.dXt[b] * pred.dSt[b];
          Rt[b] = 2.0 * sigma * mu * Eigen::MatrixXd::Identity(blocks[b].dim, blocks[b].dim) -
                  Eigen::MatrixXd((2.0 * v.array().square()).matrix().asDiagonal()) - (cross + cross.transpose());
        }
      }
      Direction corr = direction(Rt);
      auto [as, ax] = steps(corr);
      const double tau = opt_.step_fraction;
      as = std::min(1.0, tau * as);
      ax = std::min(1.0, tau * ax);
      if (as < 1e-10 && ax < 1e-10) ++stall;
      else stall = 0;

      y += as * corr.dy;
      for (int b = 0; b < nb; ++b) {
        S[b] += as * corr.dS[b];
        X[b] += ax * corr.dX[b];
        if (!blocks[b].diagonal) {
          S[b] = 0.5 * (S[b] + S[b].transpose()).eval();
          X[b] = 0.5 * (X[b] + X[b].transpose()).eval();
        }
      }
    }
  }

 private:
  SolverOptions opt_;
};

inline SdpSolution solve(const SdpProblem& prob, const SolverOptions& opt = {}) {
  return InteriorPointSolver(opt).solve(prob);
}

inline double min_eig(const Eigen::MatrixXd& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Smallest eigenvalue of F0 + sum y_i F_i over all blocks (box rows included).
inline double min_slack_eigenvalue(const SdpProblem& prob, const Eigen::VectorXd& y) {
  auto blocks = detail::build_blocks(prob);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) {
    Eigen::MatrixXd S = detail::affine_value(b, y);
    if (b.diagonal) lo = std::min(lo, S.minCoeff());
    else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues()(0));
    }
  }
  return lo;
}

// Per-block slack matrices at y (box rows excluded).
inline BlockMatrix slack_blocks(const SdpProblem& prob, const Eigen::VectorXd& y) {
  SdpProblem p = prob;
  p.box.reset();
  auto blocks = detail::build_blocks(p);
  BlockMatrix out;
  for (const auto& b : blocks) out.push_back(detail::affine_value(b, y));
  return out;
}

}  // namespace gammahull::sdp
