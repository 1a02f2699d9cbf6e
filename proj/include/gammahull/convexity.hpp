#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gammahull/freealg.hpp"
#include "gammahull/hermlin.hpp"
#include "gammahull/moments.hpp"
#include "gammahull/sdp/model.hpp"

namespace gammahull {

enum class Answer { yes, no, indeterminate };

inline std::string to_string(Answer a) {
  switch (a) {
    case Answer::yes: return "yes";
    case Answer::no: return "no";
    case Answer::indeterminate: return "indeterminate";
  }
  return "unknown";
}

// A_0 (x) I + sum_j A_j (x) gamma_j(X), coefficients indexed 0..r.
class GammaPencil {
 public:
  GammaPencil() = default;
  GammaPencil(GammaShape gamma, std::vector<CMatrix> coeffs) : gamma_(std::move(gamma)), coeffs_(std::move(coeffs)) {
    if (static_cast<int>(coeffs_.size()) != gamma_.r() + 1)
      throw std::invalid_argument("GammaPencil: expected " + std::to_string(gamma_.r() + 1) + " coefficients");
    const auto l = coeffs_.front().rows();
    for (auto& c : coeffs_) {
      if (c.rows() != l || c.cols() != l) throw std::invalid_argument("GammaPencil: coefficient sizes differ");
      c = HermitianMatrix(c).matrix();
    }
  }
  const GammaShape& gamma() const { return gamma_; }
  int size() const { return static_cast<int>(coeffs_.front().rows()); }
  const std::vector<CMatrix>& coeffs() const { return coeffs_; }
  const CMatrix& operator[](int j) const { return coeffs_[j]; }
  bool monic(double tol = 0.0) const {
    return (coeffs_[0] - CMatrix::Identity(size(), size())).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  GammaShape gamma_;
  std::vector<CMatrix> coeffs_;
};

inline CMatrix evaluate(const GammaPencil& L, const std::vector<CMatrix>& X) {
  const auto G = gamma_map(L.gamma(), X);
  const int n = static_cast<int>(X.front().rows());
  CMatrix out = detail::kron(L[0], CMatrix::Identity(n, n));
  for (int j = 0; j < L.gamma().r(); ++j) out += detail::kron(L[j + 1], G[j]);
  return out;
}

// A Gamma-pencil plus linear terms sum_k B_k (x) W_k in Hermitian unknowns W_k.
struct LiftedGammaPencil {
  GammaPencil base;
  std::vector<CMatrix> lifted;
};

inline CMatrix evaluate(const LiftedGammaPencil& L, const std::vector<CMatrix>& X, const std::vector<CMatrix>& W) {
  if (W.size() != L.lifted.size()) throw std::invalid_argument("evaluate: lifted variable count mismatch");
  CMatrix out = evaluate(L.base, X);
  for (std::size_t k = 0; k < W.size(); ++k) out += detail::kron(L.lifted[k], W[k]);
  return out;
}

struct PairCheck {
  bool ok = false;
  double deviation = 0.0;
};

inline double default_pair_tol(const std::vector<CMatrix>& X) { return 1e-8 * (1.0 + tuple_norm(X)); }

// max_j ||V^* gamma_j(X) V - gamma_j(V^* X V)||.
inline PairCheck gamma_pair_check(const GammaShape& G, const std::vector<CMatrix>& X, const CMatrix& V,
                                  std::optional<double> tol = std::nullopt) {
  const double t = tol ? *tol : default_pair_tol(X);
  if (!is_isometry(V, std::max(t, 1e-8))) throw std::invalid_argument("gamma_pair_check: V is not an isometry");
  if (static_cast<int>(X.size()) != G.g()) throw std::invalid_argument("gamma_pair_check: tuple length mismatch");
  if (V.rows() != X.front().rows()) throw std::invalid_argument("gamma_pair_check: V rows differ from tuple size");
  PairCheck r;
  r.deviation = detail::gamma_pair_deviation(G, X, V);
  r.ok = r.deviation <= t;
  return r;
}

struct Combination {
  std::vector<CMatrix> X;  // sum_i V_i^* X^(i) V_i
  std::vector<CMatrix> Z;  // direct sum of the pieces
  CMatrix V;               // col(V_i)
  PairCheck pair;
};

inline Combination gamma_convex_combine(const GammaShape& G, const std::vector<std::vector<CMatrix>>& pieces,
                                        const std::vector<CMatrix>& Vs, std::optional<double> tol = std::nullopt) {
  if (pieces.empty() || pieces.size() != Vs.size())
    throw std::invalid_argument("gamma_convex_combine: need one map per piece");
  const int m = static_cast<int>(Vs.front().cols());
  int N = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (static_cast<int>(pieces[i].size()) != G.g())
      throw std::invalid_argument("gamma_convex_combine: piece length mismatch");
    const int ni = detail::check_tuple(pieces[i]);
    if (Vs[i].rows() != ni || Vs[i].cols() != m) throw std::invalid_argument("gamma_convex_combine: map size mismatch");
    N += ni;
  }
  Combination out;
  out.V = CMatrix(N, m);
  out.Z.assign(G.g(), CMatrix::Zero(N, N));
  int off = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const int ni = static_cast<int>(Vs[i].rows());
    out.V.middleRows(off, ni) = Vs[i];
    for (int j = 0; j < G.g(); ++j) out.Z[j].block(off, off, ni, ni) = pieces[i][j];
    off += ni;
  }
  const double t = tol ? *tol : default_pair_tol(out.Z);
  if (!is_isometry(out.V, std::max(t, 1e-8)))
    throw std::invalid_argument("gamma_convex_combine: sum of V_i^* V_i is not the identity");
  out.pair = gamma_pair_check(G, out.Z, out.V, t);
  if (!out.pair.ok)
    throw std::invalid_argument("gamma_convex_combine: stacked pair is not a Gamma-pair (deviation " +
                                std::to_string(out.pair.deviation) + ")");
  for (const auto& z : out.Z) out.X.push_back(out.V.adjoint() * z * out.V);
  return out;
}

struct SpectrahedronVerdict {
  bool member = false;
  double margin = 0.0;
};

inline SpectrahedronVerdict gamma_spectrahedron_membership(const GammaPencil& L, const std::vector<CMatrix>& X,
                                                           double tol = 1e-9) {
  SpectrahedronVerdict v;
  v.margin = min_eigenvalue(evaluate(L, X));
  v.member = v.margin >= -tol;
  return v;
}

struct DropOptions {
  sdp::FeasibilityOptions feasibility;
  double bound = 1e3;  // box on lifted unknowns
};

struct DropVerdict {
  Answer member = Answer::indeterminate;
  double margin = 0.0;
  std::vector<CMatrix> lifted;
  std::string message;
};

namespace detail {

inline bool all_real(const std::vector<CMatrix>& Ms) {
  for (const auto& M : Ms)
    if (M.size() && M.imag().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

inline Answer answer_of(sdp::Feasibility f) {
  if (f == sdp::Feasibility::feasible) return Answer::yes;
  if (f == sdp::Feasibility::infeasible) return Answer::no;
  return Answer::indeterminate;
}

}  // namespace detail

// Exists Hermitian W_1..W_h with L(X, W) >= 0 (margin maximization).
inline DropVerdict spectrahedrop_membership(const LiftedGammaPencil& L, const std::vector<CMatrix>& X,
                                            const DropOptions& opt = {}) {
  DropVerdict out;
  const CMatrix base = evaluate(L.base, X);
  if (L.lifted.empty()) {
    out.margin = min_eigenvalue(base);
    out.member = out.margin >= opt.feasibility.feas_margin ? Answer::yes
                 : out.margin <= -opt.feasibility.feas_margin ? Answer::no
                                                               : Answer::indeterminate;
    out.message = "no lifted variables";
    return out;
  }
  for (const auto& B : L.lifted)
    if (B.rows() != L.base.size() || B.cols() != L.base.size())
      throw std::invalid_argument("spectrahedrop_membership: lifted coefficient size mismatch");
  const int n = static_cast<int>(X.front().rows());
  std::vector<CMatrix> data = L.lifted;
  data.push_back(base);
  const bool real = detail::all_real(data);
  sdp::LmiModel model;
  std::vector<sdp::MatrixVariable> W;
  for (std::size_t k = 0; k < L.lifted.size(); ++k) W.emplace_back(model, n, true, real, -opt.bound, opt.bound);
  sdp::BlockBuilder bb(static_cast<int>(base.rows()));
  bb.add_constant(0, 0, base);
  for (std::size_t k = 0; k < L.lifted.size(); ++k) bb.add_kron(0, 0, L.lifted[k], W[k]);
  bb.commit(model, "pencil");
  auto res = sdp::decide_feasibility(model, opt.feasibility);
  out.member = detail::answer_of(res.verdict);
  out.margin = res.margin;
  out.message = res.message;
  if (res.y.size())
    for (auto& w : W) out.lifted.push_back(w.value(res.y));
  return out;
}

struct BoundednessResult {
  Answer bounded = Answer::indeterminate;
  bool independent = false;  // {I, A_1, ..., A_g} linearly independent
  double margin = 0.0;
  std::string message;
};

namespace detail {

inline bool linearly_independent(const std::vector<CMatrix>& Ms) {
  const auto d = Ms.front().rows();
  Eigen::MatrixXd M(2 * d * d, Ms.size());
  for (std::size_t k = 0; k < Ms.size(); ++k) {
    Eigen::Map<const Eigen::VectorXcd> v(Ms[k].data(), d * d);
    M.col(k) << v.real(), v.imag();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(1e-10);
  return qr.rank() == static_cast<Eigen::Index>(Ms.size());
}

}  // namespace detail

// D_A is bounded iff A_1..A_g are independent and some S > 0 is orthogonal to
// every A_i (otherwise a nonzero PSD matrix lies in span{A_i}, giving a ray).
inline BoundednessResult spectrahedron_bounded(const std::vector<CMatrix>& A,
                                               const sdp::FeasibilityOptions& opt = {}) {
  const int d = detail::check_tuple(A);
  BoundednessResult out;
  std::vector<CMatrix> withI = A;
  withI.insert(withI.begin(), CMatrix::Identity(d, d));
  out.independent = detail::linearly_independent(withI);
  if (!detail::linearly_independent(A)) {
    out.bounded = Answer::no;
    out.message = "coefficients are linearly dependent, D_A contains a line";
    return out;
  }
  sdp::LmiModel model;
  sdp::MatrixVariable S(model, d, true, detail::all_real(A), -1.05 * d, 1.05 * d);
  std::map<int, Complex> tr;
  for (int i = 0; i < d; ++i)
    for (auto& [p, c] : S.entry(i, i)) tr[p] += c;
  sdp::add_complex_equality(model, tr, static_cast<double>(d));
  for (const auto& a : A) {
    std::map<int, Complex> row;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (auto& [p, c] : S.entry(j, i)) row[p] += a(i, j) * c;
    // <A, S> is real for Hermitian data; keep only the real equation.
    std::vector<std::pair<int, double>> re;
    for (auto& [p, c] : row)
      if (c.real() != 0.0) re.push_back({p, c.real()});
    model.add_equality(std::move(re), 0.0);
  }
  sdp::BlockBuilder bb(d);
  bb.add_kron(0, 0, CMatrix::Identity(1, 1), S);
  bb.commit(model, "S");
  auto res = sdp::decide_feasibility(model, opt);
  out.margin = res.margin;
  if (res.verdict == sdp::Feasibility::feasible) {
    out.bounded = Answer::yes;
    out.message = "positive definite matrix orthogonal to the coefficients";
  } else if (res.verdict == sdp::Feasibility::infeasible) {
    out.bounded = Answer::no;
    out.message = "recession cone is nontrivial";
  } else {
    out.message = "boundedness undecided: " + res.message;
  }
  return out;
}

struct InclusionResult {
  Answer included = Answer::indeterminate;
  double margin = 0.0;     // lambda_min of the Choi matrix at the returned point
  double residual = 0.0;   // max violation of the linear constraints
  bool boundary = false;   // accepted on verification of a singular Choi matrix
  CMatrix choi;
  std::string message;
};

struct InclusionOptions {
  sdp::FeasibilityOptions feasibility;
  double verify_tol = 1e-6;
  bool check_bounded = true;
};

// D_A subset of D_B iff the unital map I -> I, A_i -> B_i is completely
// positive; decided through a Choi matrix C = sum E_ij (x) Phi(E_ij) >= 0.
inline InclusionResult inclusion(const std::vector<CMatrix>& A, const std::vector<CMatrix>& B,
                                 const InclusionOptions& opt = {}) {
  if (A.size() != B.size() || A.empty()) throw std::invalid_argument("inclusion: tuples must have equal length");
  const int d1 = detail::check_tuple(A), d2 = detail::check_tuple(B);
  if (opt.check_bounded) {
    auto bd = spectrahedron_bounded(A, opt.feasibility);
    if (bd.bounded == Answer::no) throw std::invalid_argument("inclusion: D_A is unbounded");
  }
  std::vector<CMatrix> data = A;
  data.insert(data.end(), B.begin(), B.end());
  const bool real = detail::all_real(data);
  const int D = d1 * d2;
  sdp::LmiModel model;
  sdp::MatrixVariable C(model, D, true, real, -1.05 * d2, 1.05 * d2);
  auto constraint = [&](const CMatrix& M, const CMatrix& target) {
    for (int s = 0; s < d2; ++s)
      for (int t = s; t < d2; ++t) {
        std::map<int, Complex> row;
        for (int i = 0; i < d1; ++i)
          for (int j = 0; j < d1; ++j) {
            if (M(i, j) == Complex(0.0)) continue;
            for (auto& [p, c] : C.entry(i * d2 + s, j * d2 + t)) row[p] += M(i, j) * c;
          }
        sdp::add_complex_equality(model, row, target(s, t));
      }
  };
  constraint(CMatrix::Identity(d1, d1), CMatrix::Identity(d2, d2));
  for (std::size_t k = 0; k < A.size(); ++k) constraint(A[k], B[k]);
  sdp::BlockBuilder bb(D);
  bb.add_kron(0, 0, CMatrix::Identity(1, 1), C);
  bb.commit(model, "choi");
  auto res = sdp::decide_feasibility(model, opt.feasibility);
  InclusionResult out;
  out.message = res.message;
  if (res.y.size()) {
    out.choi = C.value(res.y);
    out.margin = min_eigenvalue(out.choi);
    out.residual = model.equality_residual(res.y);
  } else {
    out.margin = -std::numeric_limits<double>::infinity();
  }
  if (res.verdict == sdp::Feasibility::feasible) {
    out.included = Answer::yes;
  } else if (res.verdict == sdp::Feasibility::infeasible) {
    out.included = Answer::no;
  } else if (res.y.size() && out.margin >= -opt.verify_tol * std::max(1.0, out.choi.norm()) &&
             out.residual <= opt.verify_tol) {
    out.included = Answer::yes;
    out.boundary = true;
    out.message = "singular Choi matrix verified within tolerance";
  }
  return out;
}

// X in the Gamma-polar of D_A (equivalently the Gamma matrix range of A) iff
// D_{Gamma(A)} is contained in D_{Gamma(X)}.
inline InclusionResult gamma_polar_membership(const GammaShape& G, const std::vector<CMatrix>& A,
                                              const std::vector<CMatrix>& X, const InclusionOptions& opt = {}) {
  const auto GA = gamma_map(G, A), GX = gamma_map(G, X);
  auto bd = spectrahedron_bounded(GA, opt.feasibility);
  if (bd.bounded == Answer::no) throw std::invalid_argument("gamma_polar_membership: D_Gamma(A) is unbounded");
  if (!bd.independent)
    throw std::invalid_argument("gamma_polar_membership: {I, gamma_j(A)} is linearly dependent");
  InclusionOptions o = opt;
  o.check_bounded = false;
  return inclusion(GA, GX, o);
}

}  // namespace gammahull
