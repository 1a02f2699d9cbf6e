#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "gammahull/sdp/problem.hpp"
#include "gammahull/sdp/sdpa.hpp"
#include "gammahull/sdp/solver.hpp"

namespace gammahull::sdp {

// Rebuilds a solution from raw (y, X) and decides its status from
// recomputed residuals only.
inline SdpSolution assess_solution(const SdpProblem& prob, const Eigen::VectorXd& y, const BlockMatrix& Xin,
                                   double tol = 1e-6) {
  auto blocks = detail::build_blocks(prob);
  const int nb = static_cast<int>(blocks.size());
  if (static_cast<int>(Xin.size()) != nb) throw std::runtime_error("assess_solution: block count mismatch");
  SdpSolution sol;
  sol.y = y;
  sol.dual_matrix = Xin;
  double scale = 1.0, smin = 1e300, xmin = 1e300, dobj = 0.0;
  for (int b = 0; b < nb; ++b) {
    const auto& B = blocks[b];
    const bool shape_ok = B.diagonal ? (Xin[b].rows() == B.dim && Xin[b].cols() == 1)
                                     : (Xin[b].rows() == B.dim && Xin[b].cols() == B.dim);
    if (!shape_ok) throw std::runtime_error("assess_solution: block shape mismatch");
    Eigen::MatrixXd S = detail::affine_value(B, y);
    sol.primal_matrix.push_back(S);
    scale = std::max(scale, B.F0.cwiseAbs().maxCoeff());
    if (B.diagonal) {
      smin = std::min(smin, S.minCoeff());
      xmin = std::min(xmin, Xin[b].minCoeff());
    } else {
      smin = std::min(smin, min_eig(S));
      xmin = std::min(xmin, min_eig(Xin[b]));
    }
    dobj += (B.F0.array() * Xin[b].array()).sum();
  }
  Eigen::VectorXd Fx = Eigen::VectorXd::Zero(prob.num_vars);
  for (int b = 0; b < nb; ++b)
    for (const auto& vt : blocks[b].vars) Fx(vt.var) += detail::inner(blocks[b], vt.terms, Xin[b]);
  sol.dual_residual = -prob.objective - Fx;
  sol.objective_value = prob.objective.dot(y);
  sol.dual_objective = dobj;
  sol.duality_gap = dobj - sol.objective_value;
  const double rpn = sol.dual_residual.size() ? sol.dual_residual.cwiseAbs().maxCoeff() : 0.0;
  sol.max_constraint_residual = std::max(rpn, std::max(0.0, -smin));
  const double xnorm = [&] {
    double s = 0;
    for (const auto& X : Xin) s += X.cwiseAbs().sum();
    return s;
  }();
  if (dobj < 0 && (Fx.size() == 0 || Fx.cwiseAbs().maxCoeff() <= 1e-7 * -dobj) && xmin >= -1e-8 * xnorm) {
    sol.status = Status::infeasible_certified;
    BlockMatrix f;
    for (const auto& X : Xin) f.push_back(X / -dobj);
    sol.farkas = std::move(f);
    sol.message = "Farkas certificate verified";
  } else if (smin >= -1e-8 * scale && xmin >= -1e-8 * std::max(1.0, xnorm) &&
             rpn <= tol * (1.0 + prob.objective.norm()) &&
             std::abs(sol.duality_gap) <= tol * (1.0 + std::abs(sol.objective_value) + std::abs(dobj))) {
    sol.status = Status::optimal;
    sol.message = "residuals verified";
  } else {
    sol.status = Status::indeterminate;
    sol.message = "residual check failed";
  }
  return sol;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "'\\''";
    else out += ch;
  }
  return out + "'";
}

// Runs `command input output`; GAMMAHULL_SOLVER, when set, replaces command.
inline SdpSolution external_solve(const SdpProblem& prob, std::string command) {
  if (const char* env = std::getenv("GAMMAHULL_SOLVER"); env && *env) command = env;
  if (command.empty()) throw std::invalid_argument("external_solve: no solver command");
  static std::atomic<int> counter{0};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const std::string stem = "gammahull_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const fs::path in = dir / (stem + ".dat-s"), out = dir / (stem + ".sol");
  export_sdpa(prob, in.string());
  const std::string cmd = command + " " + shell_quote(in.string()) + " " + shell_quote(out.string()) + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  std::error_code ec;
  if (rc == -1) {
    fs::remove(in, ec);
    throw std::runtime_error("external_solve: failed to spawn '" + command + "'");
  }
  std::ifstream is(out);
  if (!is) {
    fs::remove(in, ec);
    throw std::runtime_error("external_solve: solver wrote no output (exit status " + std::to_string(rc) + ")");
  }
  RawSolution raw;
  try {
    raw = read_solution(exported_dims(prob), prob.num_vars, is);
  } catch (...) {
    fs::remove(in, ec);
    fs::remove(out, ec);
    throw;
  }
  fs::remove(in, ec);
  fs::remove(out, ec);
  return assess_solution(prob, raw.y, raw.X);
}

}  // namespace gammahull::sdp
