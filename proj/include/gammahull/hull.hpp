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

#include "gammahull/certify.hpp"
#include "gammahull/convexity.hpp"
#include "gammahull/freealg.hpp"
#include "gammahull/hermlin.hpp"
#include "gammahull/moments.hpp"
#include "gammahull/sdp/model.hpp"

namespace gammahull {

struct LiftOptions {
  std::optional<double> bound_k;  // Archimedean constant, boxes +-1.05 k^|w|
  double default_factor = 10.0;   // otherwise +-(1 + ||X||)^|w| * default_factor
  bool force_complex = false;
};

inline int lift_eta(const MatrixPolynomial& p, int d) { return d + (p.degree() + 1) / 2; }

namespace detail {

inline bool real_polynomial(const MatrixPolynomial& p) {
  for (const auto& [w, c] : p.terms())
    if (c.imag().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

inline void check_lift_inputs(const MatrixPolynomial& p, const GammaShape& G, int d) {
  if (!p.is_symmetric()) throw std::invalid_argument("lift: p is not symmetric");
  if (p.g() != G.g()) throw std::invalid_argument("lift: p and Gamma have different variable counts");
  if (d < 0) throw std::invalid_argument("lift: level must be nonnegative");
  const int D = 2 * lift_eta(p, d);
  if (G.delta() > D)
    throw std::invalid_argument("lift: Gamma monomials of degree " + std::to_string(G.delta()) +
                                " exceed moment degree " + std::to_string(D));
}

}  // namespace detail

// Truncated lift at level d: moments Y_w, |w| <= 2 eta, with Y_e = I,
// Y_{x_i} = X_i, Gamma relations, H_eta(Y) >= 0 and the localizing matrix of
// p at level d >= 0.
class LiftProblem {
 public:
  LiftProblem(MatrixPolynomial p, GammaShape G, std::vector<CMatrix> X, int d, const LiftOptions& opt = {})
      : p_(std::move(p)), G_(std::move(G)), X_(std::move(X)), d_(d) {
    detail::check_lift_inputs(p_, G_, d_);
    if (static_cast<int>(X_.size()) != G_.g()) throw std::invalid_argument("lift: anchor length mismatch");
    n_ = detail::check_tuple(X_);
    for (const auto& x : X_) HermitianMatrix check(x);
    eta_ = lift_eta(p_, d_);
    index_ = MomentIndex(G_.g(), 2 * eta_);
    bool real = !opt.force_complex && detail::all_real(X_) && detail::real_polynomial(p_);
    for (const auto& gm : G_.gammas()) real = real && detail::real_polynomial(gm);
    real_ = real;
    const double base = opt.bound_k ? *opt.bound_k : 1.0 + tuple_norm(X_);
    const double factor = opt.bound_k ? 1.05 : opt.default_factor;
    const auto& reps = index_.representatives();
    vars_.resize(reps.size());
    anchored_.assign(reps.size(), std::nullopt);
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const Word& w = reps[r];
      if (w.empty()) {
        anchored_[r] = CMatrix::Identity(n_, n_);
      } else if (w.size() == 1) {
        anchored_[r] = X_[w.letters()[0]];
      } else {
        const double b = std::pow(base, w.size()) * factor;
        vars_[r] = sdp::MatrixVariable(model_, n_, w.is_palindrome(), real_, -b, b);
      }
    }
    build_blocks();
    build_gamma_equalities();
  }

  const MatrixPolynomial& p() const { return p_; }
  const GammaShape& gamma() const { return G_; }
  const std::vector<CMatrix>& anchor() const { return X_; }
  int level() const { return d_; }
  int eta() const { return eta_; }
  int n() const { return n_; }
  bool real_mode() const { return real_; }
  const MomentIndex& index() const { return index_; }
  const sdp::LmiModel& model() const { return model_; }
  int num_params() const { return model_.num_params(); }
  int hankel_block() const { return 0; }
  int localizing_block() const { return 1; }
  int hankel_dim() const { return model_.blocks()[0].dim; }
  int localizing_dim() const { return model_.blocks()[1].dim; }

  // Y_w(i, j) as constant + sum coef * y_param.
  std::pair<Complex, sdp::MatrixVariable::Terms> entry(const Word& w, int i, int j) const {
    const int r = index_.rep_position(w);
    const bool direct = canonical(w) == w;
    const int a = direct ? i : j, b = direct ? j : i;
    Complex c = 0.0;
    sdp::MatrixVariable::Terms t;
    if (anchored_[r]) {
      c = (*anchored_[r])(a, b);
    } else {
      t = vars_[r]->entry(a, b);
    }
    if (!direct) {
      c = std::conj(c);
      for (auto& [p, k] : t) k = std::conj(k);
    }
    return {c, t};
  }

  MomentSequence moments(const Eigen::VectorXd& y) const {
    MomentSequence Y(index_, n_);
    const auto& reps = index_.representatives();
    for (std::size_t r = 0; r < reps.size(); ++r)
      Y.set(reps[r], anchored_[r] ? *anchored_[r] : vars_[r]->value(y));
    return Y;
  }

  // Trace of H_eta as a linear functional on the parameters (constant dropped).
  Eigen::VectorXd hankel_trace() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(num_params());
    for (const Word& a : enumerate_words(G_.g(), eta_)) {
      const Word w = a.adjoint() * a;
      for (int i = 0; i < n_; ++i)
        for (auto& [p, k] : entry(w, i, i).second) c(p) += k.real();
    }
    return c;
  }

 private:
  void build_blocks() {
    const auto wh = enumerate_words(G_.g(), eta_);
    const int Wh = static_cast<int>(wh.size());
    sdp::BlockBuilder H(Wh * n_);
    for (int a = 0; a < Wh; ++a)
      for (int b = a; b < Wh; ++b) {
        const Word w = wh[a].adjoint() * wh[b];
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j) {
            auto [c, t] = entry(w, i, j);
            H.add(a * n_ + i, b * n_ + j, c, t);
          }
      }
    H.commit(model_, "hankel");
    const auto wl = enumerate_words(G_.g(), d_);
    const int Wl = static_cast<int>(wl.size()), mu = p_.mu(), bs = mu * n_;
    sdp::BlockBuilder L(Wl * bs);
    for (int a = 0; a < Wl; ++a)
      for (int b = a; b < Wl; ++b)
        for (const auto& [g, coef] : p_.terms()) {
          const Word w = wl[a].adjoint() * g * wl[b];
          for (int s = 0; s < mu; ++s)
            for (int t = 0; t < mu; ++t) {
              const Complex k = coef(s, t);
              if (k == Complex(0.0)) continue;
              for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j) {
                  auto [c, terms] = entry(w, i, j);
                  L.add(a * bs + s * n_ + i, b * bs + t * n_ + j, c, terms, k);
                }
            }
        }
    L.commit(model_, "localizing");
  }

  void build_gamma_equalities() {
    auto set = gamma_constraints(G_, X_, 2 * eta_);
    for (const auto& rel : set.relations)
      for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) {
          std::map<int, Complex> coefs;
          Complex rhs = (*rel.rhs)(i, j);
          for (const auto& [w, c] : rel.terms) {
            auto [k0, t] = entry(w, i, j);
            rhs -= c * k0;
            for (auto& [p, k] : t) coefs[p] += c * k;
          }
          if (real_) rhs = rhs.real();
          sdp::add_complex_equality(model_, coefs, rhs);
        }
  }

  MatrixPolynomial p_;
  GammaShape G_;
  std::vector<CMatrix> X_;
  int d_ = 0, eta_ = 0, n_ = 0;
  bool real_ = true;
  MomentIndex index_;
  sdp::LmiModel model_;
  std::vector<std::optional<sdp::MatrixVariable>> vars_;
  std::vector<std::optional<CMatrix>> anchored_;
};

inline LiftProblem build_lift(const MatrixPolynomial& p, const GammaShape& G, const std::vector<CMatrix>& X, int d,
                              const LiftOptions& opt = {}) {
  return LiftProblem(p, G, X, d, opt);
}

enum class LevelStatus { member_at_level, not_member_at_level, indeterminate };

inline std::string to_string(LevelStatus s) {
  switch (s) {
    case LevelStatus::member_at_level: return "member_at_level";
    case LevelStatus::not_member_at_level: return "not_member_at_level";
    case LevelStatus::indeterminate: return "indeterminate";
  }
  return "unknown";
}

enum class Objective { margin, trace_min };

struct MembershipOptions {
  Objective objective = Objective::margin;
  LiftOptions lift;
  sdp::FeasibilityOptions feasibility;
  double accept_tol = 1e-7;  // trace_min: smallest admissible kept-row eigenvalue
};

struct MembershipVerdict {
  LevelStatus status = LevelStatus::indeterminate;
  double margin = 0.0;             // min kept-row eigenvalue over both blocks
  double hankel_margin = 0.0;      // kept rows of H_eta
  double localizing_margin = 0.0;  // kept rows of the localizing matrix
  double dual_bound = std::numeric_limits<double>::infinity();
  std::optional<MomentSequence> witness;
  int level = 0;
  int eta = 0;
  int num_params = 0;
  int hankel_dim = 0;
  int localizing_dim = 0;
  int free_params = 0;
  bool boundary = false;  // accepted with margin within accept_tol of zero
  std::string message;
};

inline MembershipVerdict membership(const LiftProblem& lift, const MembershipOptions& opt = {}) {
  MembershipVerdict v;
  v.level = lift.level();
  v.eta = lift.eta();
  v.num_params = lift.num_params();
  v.hankel_dim = lift.hankel_dim();
  v.localizing_dim = lift.localizing_dim();
  const auto& model = lift.model();
  auto fill_margins = [&](const sdp::Presolved& P, const Eigen::VectorXd& y) {
    v.hankel_margin = sdp::detail::kept_min_eig(model, P, 0, y);
    v.localizing_margin = sdp::detail::kept_min_eig(model, P, 1, y);
    v.margin = std::min(v.hankel_margin, v.localizing_margin);
    v.free_params = static_cast<int>(P.free_params.size());
  };
  if (opt.objective == Objective::margin) {
    auto res = sdp::decide_feasibility(model, opt.feasibility);
    v.dual_bound = res.dual_bound;
    v.message = res.message;
    if (res.presolve.infeasible) {
      v.status = LevelStatus::not_member_at_level;
      v.margin = v.hankel_margin = v.localizing_margin = -std::numeric_limits<double>::infinity();
      return v;
    }
    fill_margins(res.presolve, res.y);
    if (res.verdict == sdp::Feasibility::feasible) {
      v.status = LevelStatus::member_at_level;
      v.witness = lift.moments(res.y);
    } else if (res.verdict == sdp::Feasibility::infeasible) {
      v.status = LevelStatus::not_member_at_level;
    } else if (res.verdict == sdp::Feasibility::marginal) {
      // Faces that presolve cannot expose leave no interior; a point that is
      // feasible to solver accuracy is still accepted, flagged as boundary.
      const double scale = std::max(1.0, res.y.cwiseAbs().maxCoeff());
      double full = std::numeric_limits<double>::infinity();
      for (double m : res.block_margins) full = std::min(full, m);
      if (full >= -opt.accept_tol * scale && res.equality_residual <= 1e-8 * scale) {
        v.status = LevelStatus::member_at_level;
        v.boundary = true;
        v.witness = lift.moments(res.y);
      }
    }
    return v;
  }
  Eigen::VectorXd obj = -lift.hankel_trace();
  auto res = sdp::optimize(model, obj, opt.feasibility);
  v.message = res.message;
  if (res.presolve_infeasible || res.status == sdp::Status::infeasible_certified) {
    v.status = LevelStatus::not_member_at_level;
    v.margin = v.hankel_margin = v.localizing_margin = -std::numeric_limits<double>::infinity();
    return v;
  }
  fill_margins(res.presolve, res.y);
  const double scale = std::max(1.0, res.y.cwiseAbs().maxCoeff());
  if (res.status == sdp::Status::optimal && v.margin >= -opt.accept_tol * scale &&
      model.equality_residual(res.y) <= 1e-8 * scale) {
    v.status = LevelStatus::member_at_level;
    v.witness = lift.moments(res.y);
  }
  return v;
}

inline MembershipVerdict membership(const MatrixPolynomial& p, const GammaShape& G, const std::vector<CMatrix>& X,
                                    int d, const MembershipOptions& opt = {}) {
  return membership(build_lift(p, G, X, d, opt.lift), opt);
}

// The margin SDP of a lift after presolve, as handed to the solver.
inline sdp::ModelSdp lift_sdp(const LiftProblem& lift, const sdp::FeasibilityOptions& opt = {}) {
  auto P = sdp::presolve(lift.model(), opt.presolve);
  if (P.infeasible) throw std::runtime_error("lift_sdp: presolve proves infeasibility (" + P.reason + ")");
  return sdp::build_sdp(lift.model(), P, nullptr, true, opt.t_cap);
}

// Symbolic form of the lift: a Gamma-pencil in x with lifted Hermitian
// unknowns. Unknowns are Y_w for palindromes w and the parts C, D of
// Y_w = C + iD otherwise; Gamma relations eliminate one unknown each.
struct LiftPencil {
  LiftedGammaPencil pencil;
  std::vector<Word> lifted_words;
  std::vector<char> lifted_part;  // 'h' palindrome, 'c' Hermitian part, 'd' skew part / i
  int eta = 0;
  int level = 0;
  int hankel_size = 0;
  int localizing_size = 0;
};

namespace detail {

struct Unknown {
  Word word;
  char part;  // 'h', 'c', 'd'
};

}  // namespace detail

inline LiftPencil emit_lift_pencil(const MatrixPolynomial& p, const GammaShape& G, int d) {
  detail::check_lift_inputs(p, G, d);
  const int g = G.g(), eta = lift_eta(p, d), mu = p.mu();
  MomentIndex index(g, 2 * eta);
  // Unknown layout: 0 = e, 1..g = x_i, then the rest in word order.
  std::vector<detail::Unknown> unk;
  std::map<Word, int> first;  // representative -> first unknown
  for (const Word& w : index.representatives()) {
    first[w] = static_cast<int>(unk.size());
    if (w.is_palindrome()) {
      unk.push_back({w, 'h'});
    } else {
      unk.push_back({w, 'c'});
      unk.push_back({w, 'd'});
    }
  }
  const int U = static_cast<int>(unk.size());
  const auto wh = enumerate_words(g, eta), wl = enumerate_words(g, d);
  const int Hs = static_cast<int>(wh.size()), Ls = static_cast<int>(wl.size()) * mu, S = Hs + Ls;
  std::vector<CMatrix> K(U, CMatrix::Zero(S, S));
  // Adds coef * Y_w at (r, c), split into unknown coefficients.
  auto put = [&](const Word& w, int r, int c, Complex coef) {
    const Word rep = canonical(w);
    const int u = first.at(rep);
    if (rep.is_palindrome()) {
      K[u](r, c) += coef;
      return;
    }
    const Complex sign = rep == w ? 1.0 : -1.0;
    K[u](r, c) += coef;
    K[u + 1](r, c) += coef * Complex(0, 1) * sign;
  };
  for (int a = 0; a < Hs; ++a)
    for (int b = 0; b < Hs; ++b) put(wh[a].adjoint() * wh[b], a, b, 1.0);
  for (int a = 0; a < static_cast<int>(wl.size()); ++a)
    for (int b = 0; b < static_cast<int>(wl.size()); ++b)
      for (const auto& [gw, coef] : p.terms())
        for (int s = 0; s < mu; ++s)
          for (int t = 0; t < mu; ++t)
            if (coef(s, t) != Complex(0.0)) put(wl[a].adjoint() * gw * wl[b], Hs + a * mu + s, Hs + b * mu + t, coef(s, t));

  // Gamma relations in the Hermitian unknowns: sum_u R(j,u) U_u = gamma_j.
  const int q = G.r() - g;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(q, U);
  for (int j = 0; j < q; ++j)
    for (const auto& [w, c] : G[g + j].terms()) {
      const Word rep = canonical(w);
      const int u = first.at(rep);
      const Complex k = c(0, 0);
      if (rep.is_palindrome()) {
        if (std::abs(k.imag()) > 1e-12) throw std::invalid_argument("emit_lift_pencil: non-real palindrome coefficient");
        R(j, u) += k.real();
        continue;
      }
      // k Y_w with Y_w = C +- iD; Hermitian relations pair k with conj(k) on w*.
      const double sign = rep == w ? 1.0 : -1.0;
      R(j, u) += k.real();
      R(j, u + 1) -= sign * k.imag();
    }
  // Eliminate one non-anchored unknown per relation, latest first.
  Eigen::MatrixXd Gm = Eigen::MatrixXd::Identity(q, q);  // right-hand sides in gamma_j
  std::vector<int> pivot(q, -1);
  std::vector<char> is_pivot(U, 0);
  for (int j = 0; j < q; ++j) {
    int best = -1;
    for (int u = U - 1; u > g; --u)
      if (!is_pivot[u] && std::abs(R(j, u)) > 1e-12) {
        best = u;
        break;
      }
    if (best < 0) throw std::invalid_argument("emit_lift_pencil: Gamma relation without a free moment");
    const double pv = R(j, best);
    R.row(j) /= pv;
    Gm.row(j) /= pv;
    for (int o = 0; o < q; ++o) {
      if (o == j || R(o, best) == 0.0) continue;
      const double f = R(o, best);
      R.row(o) -= f * R.row(j);
      Gm.row(o) -= f * Gm.row(j);
    }
    pivot[j] = best;
    is_pivot[best] = 1;
  }
  // U_piv = sum_j Gm(row, j) gamma_j - sum_{u != piv} R(row, u) U_u.
  std::vector<CMatrix> A(G.r() + 1, CMatrix::Zero(S, S));
  for (int j = 0; j < q; ++j) {
    const int pv = pivot[j];
    for (int jj = 0; jj < q; ++jj) A[1 + g + jj] += Gm(j, jj) * K[pv];
    for (int u = 0; u < U; ++u)
      if (u != pv && R(j, u) != 0.0) K[u] -= R(j, u) * K[pv];
  }
  A[0] += K[0];
  for (int i = 0; i < g; ++i) A[1 + i] += K[1 + i];
  LiftPencil out;
  out.eta = eta;
  out.level = d;
  out.hankel_size = Hs;
  out.localizing_size = Ls;
  for (auto& a : A) a = 0.5 * (a + a.adjoint()).eval();
  out.pencil.base = GammaPencil(G, A);
  for (int u = g + 1; u < U; ++u) {
    if (is_pivot[u]) continue;
    out.pencil.lifted.push_back(0.5 * (K[u] + K[u].adjoint()));
    out.lifted_words.push_back(unk[u].word);
    out.lifted_part.push_back(unk[u].part);
  }
  return out;
}

// Lifted unknowns realized by a moment sequence.
inline std::vector<CMatrix> lift_pencil_values(const LiftPencil& L, const MomentSequence& Y) {
  std::vector<CMatrix> W;
  for (std::size_t k = 0; k < L.lifted_words.size(); ++k) {
    const CMatrix B = Y.at(L.lifted_words[k]);
    switch (L.lifted_part[k]) {
      case 'h': W.push_back(B); break;
      case 'c': W.push_back(0.5 * (B + B.adjoint())); break;
      default: W.push_back((B - B.adjoint()) / Complex(0, 2)); break;
    }
  }
  return W;
}

// max |L(X, W(Y)) - (H_eta(Y) (+) localizing(Y))| for Y anchored at X.
inline double lift_pencil_substitution_error(const LiftPencil& L, const MatrixPolynomial& p,
                                             const std::vector<CMatrix>& X, const MomentSequence& Y) {
  const CMatrix lhs = evaluate(L.pencil, X, lift_pencil_values(L, Y));
  const CMatrix H = hankel(Y, L.eta), Lp = localizing(Y, p, L.level);
  CMatrix rhs = CMatrix::Zero(H.rows() + Lp.rows(), H.rows() + Lp.rows());
  rhs.topLeftCorner(H.rows(), H.rows()) = H;
  rhs.bottomRightCorner(Lp.rows(), Lp.rows()) = Lp;
  if (lhs.rows() != rhs.rows()) throw std::logic_error("lift pencil size mismatch");
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

struct GnsOptions {
  double rank_tol = 1e-8;
  std::optional<int> shift;  // flatness shift a: rank H_{eta-a} = rank H_eta; default deg p
  double residual_tol = 1e-6;
};

struct GnsRealization {
  bool success = false;
  std::vector<CMatrix> Z;
  CMatrix V;
  int rank = 0;
  int rank_low = 0;
  double residual_moments = 0.0;  // max over |w| <= 2 eta of ||V^* w(Z) V - Y_w||
  double residual_psd = 0.0;      // lambda_min p(Z)
  PairCheck pair;
  std::string message;
};

inline GnsRealization gns_extract(const MomentSequence& Y, const MatrixPolynomial& p, const GammaShape& G, int eta,
                                  const GnsOptions& opt = {}) {
  GnsRealization out;
  if (eta < 1) throw std::invalid_argument("gns_extract: eta must be positive");
  const int g = Y.g(), n = Y.n();
  const int a = std::clamp(opt.shift.value_or(p.degree()), 1, eta);
  const CMatrix H = hankel(Y, eta);
  auto fl = is_flat(Y, eta, a, opt.rank_tol);
  out.rank = fl.rank_high;
  out.rank_low = fl.rank_low;
  if (!fl.flat) {
    out.message = "not flat: rank H_" + std::to_string(eta - a) + " = " + std::to_string(fl.rank_low) + ", rank H_" +
                  std::to_string(eta) + " = " + std::to_string(fl.rank_high);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (H + H.adjoint()));
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > opt.rank_tol * top) keep.push_back(static_cast<int>(i));
  const int m = static_cast<int>(keep.size());
  CMatrix R(m, H.cols());
  for (int k = 0; k < m; ++k) R.row(k) = std::sqrt(ev(keep[k])) * es.eigenvectors().col(keep[k]).adjoint();
  const auto words = enumerate_words(g, eta);
  std::map<Word, int> pos;
  for (std::size_t i = 0; i < words.size(); ++i) pos[words[i]] = static_cast<int>(i);
  const auto src = enumerate_words(g, eta - 1);
  const int S = static_cast<int>(src.size());
  CMatrix Rs(m, S * n);
  for (int s = 0; s < S; ++s) Rs.middleCols(s * n, n) = R.middleCols(pos[src[s]] * n, n);
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(Rs.adjoint());
  for (int j = 0; j < g; ++j) {
    CMatrix Rd(m, S * n);
    for (int s = 0; s < S; ++s) Rd.middleCols(s * n, n) = R.middleCols(pos[Word::letter(j) * src[s]] * n, n);
    CMatrix Zs = cod.solve(Rd.adjoint()).adjoint();
    out.Z.push_back(0.5 * (Zs + Zs.adjoint()));
  }
  out.V = R.middleCols(0, n);
  if (!is_isometry(out.V, 1e-6)) {
    out.message = "compression is not an isometry";
    return out;
  }
  {
    // Re-orthonormalize V against truncation error.
    Eigen::JacobiSVD<CMatrix> svd(out.V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.V = svd.matrixU() * svd.matrixV().adjoint();
  }
  detail::WordEvaluator ev_z(out.Z);
  for (const Word& w : Y.index().words()) {
    if (w.size() > 2 * eta) continue;
    out.residual_moments = std::max(out.residual_moments, (out.V.adjoint() * ev_z(w) * out.V - Y.at(w)).norm());
  }
  out.residual_psd = min_eigenvalue(evaluate(p, out.Z));
  out.pair = gamma_pair_check(G, out.Z, out.V, opt.residual_tol);
  out.success = out.residual_moments <= opt.residual_tol && out.pair.ok;
  if (!out.success)
    out.message = "residuals too large: moments " + std::to_string(out.residual_moments) + ", Gamma-pair " +
                  std::to_string(out.pair.deviation);
  return out;
}

enum class HierarchyOutcome { member_certified, not_member, level_only, undetermined };

inline std::string to_string(HierarchyOutcome o) {
  switch (o) {
    case HierarchyOutcome::member_certified: return "MEMBER_CERTIFIED";
    case HierarchyOutcome::not_member: return "NOT_MEMBER";
    case HierarchyOutcome::level_only: return "LEVEL_ONLY";
    case HierarchyOutcome::undetermined: return "UNDETERMINED";
  }
  return "unknown";
}

struct HierarchyCriteria {
  bool use_flatness = true;
  std::optional<int> pcp_degree;          // assumed positivity-certificate degree N
  std::optional<int> separation_degree;   // default: the degree matching each level
  MembershipOptions membership;
  SeparateOptions separation;
  std::vector<double> rank_tols{1e-8, 1e-6, 1e-4};
  double witness_tol = 1e-7;  // ||V* Z V - X|| and the Gamma-pair deviation
  double psd_tol = 1e-7;      // p(Z) >= -psd_tol
};

struct LevelRecord {
  int level = 0;
  MembershipVerdict verdict;
  std::optional<GnsRealization> gns;
  std::string note;
};

struct HierarchyReport {
  HierarchyOutcome outcome = HierarchyOutcome::undetermined;
  int decided_level = -1;
  std::vector<LevelRecord> levels;
  std::optional<GnsRealization> witness;
  std::optional<SeparationCertificate> separation;
  double witness_error = 0.0;  // ||V* Z V - X|| of the accepted witness
  bool monotone = true;
  std::string message;
};

// Direct check that (Z, V) exhibits X in the Gamma-convex hull of D_p.
inline bool accept_witness(const GnsRealization& r, const MatrixPolynomial& p, const GammaShape& G,
                           const std::vector<CMatrix>& X, const HierarchyCriteria& c, double& err) {
  if (r.Z.empty()) return false;
  err = 0.0;
  for (std::size_t j = 0; j < X.size(); ++j) err = std::max(err, (r.V.adjoint() * r.Z[j] * r.V - X[j]).norm());
  const auto pair = gamma_pair_check(G, r.Z, r.V, c.witness_tol * (1.0 + tuple_norm(r.Z)));
  return err <= c.witness_tol && pair.ok && min_eigenvalue(evaluate(p, r.Z)) >= -c.psd_tol;
}

// Tries flat extraction from a trace-minimizing solution at the given level.
inline std::optional<GnsRealization> certify_level(const MatrixPolynomial& p, const GammaShape& G,
                                                   const std::vector<CMatrix>& X, int d, const HierarchyCriteria& c,
                                                   std::string& note, double& err) {
  MembershipOptions mo = c.membership;
  mo.objective = Objective::trace_min;
  auto tv = membership(p, G, X, d, mo);
  std::vector<const MomentSequence*> cands;
  if (tv.witness) cands.push_back(&*tv.witness);
  std::optional<GnsRealization> last;
  for (const auto* Y : cands)
    for (double tol : c.rank_tols) {
      GnsOptions go;
      go.rank_tol = tol;
      go.shift = 1;
      go.residual_tol = std::max(1e-6, 10 * tol);
      auto r = gns_extract(*Y, p, G, tv.eta, go);
      if (accept_witness(r, p, G, X, c, err)) return r;
      last = r;
    }
  note = tv.witness ? (last ? last->message : "no extraction") : "trace-min solve failed: " + tv.message;
  if (last && last->message.empty()) note = "witness failed direct verification";
  return std::nullopt;
}

inline HierarchyReport run_hierarchy(const MatrixPolynomial& p, const GammaShape& G, const std::vector<CMatrix>& X,
                                     int d_max, const HierarchyCriteria& c = {}) {
  if (d_max < 0) throw std::invalid_argument("run_hierarchy: d_max must be nonnegative");
  HierarchyReport rep;
  bool seen_not_member = false;
  for (int d = 0; d <= d_max; ++d) {
    LevelRecord rec;
    rec.level = d;
    rec.verdict = membership(p, G, X, d, c.membership);
    const auto status = rec.verdict.status;
    if (status == LevelStatus::member_at_level && seen_not_member) rep.monotone = false;
    if (status == LevelStatus::not_member_at_level) {
      seen_not_member = true;
      const int N = c.separation_degree.value_or(separation_degree(p, d));
      try {
        auto cert = separate(p, G, X, N, c.separation);
        if (cert && verify_certificate(*cert, p, X).ok) {
          rep.separation = std::move(cert);
          rep.outcome = HierarchyOutcome::not_member;
          rep.decided_level = d;
          rep.message = "separating Gamma-pencil of size " + std::to_string(X.front().rows()) + " at degree " +
                        std::to_string(N);
          rep.levels.push_back(std::move(rec));
          return rep;
        }
        rec.note = "lift infeasible; no separating pencil at degree " + std::to_string(N);
      } catch (const std::exception& e) {
        rec.note = std::string("lift infeasible; separation failed: ") + e.what();
      }
      rep.outcome = HierarchyOutcome::level_only;
      rep.decided_level = d;
      rep.message = "not a member at level " + std::to_string(d) + " (implies X outside the hull); " + rec.note;
      rep.levels.push_back(std::move(rec));
      return rep;
    }
    if (status == LevelStatus::member_at_level) {
      rep.outcome = HierarchyOutcome::level_only;
      rep.decided_level = d;
      rep.message = "member at level " + std::to_string(d);
      if (c.pcp_degree && separation_degree(p, d) >= *c.pcp_degree)
        rep.message += "; in the closed hull if the degree-" + std::to_string(*c.pcp_degree) +
                       " positivity certificate property holds";
      if (c.use_flatness) {
        double err = 0.0;
        auto w = certify_level(p, G, X, d, c, rec.note, err);
        if (w) {
          rec.gns = w;
          rep.witness = std::move(w);
          rep.witness_error = err;
          rep.outcome = HierarchyOutcome::member_certified;
          rep.message = "flat witness of size " + std::to_string(rep.witness->Z.front().rows()) + " at level " +
                        std::to_string(d);
          rep.levels.push_back(std::move(rec));
          return rep;
        }
      }
    } else {
      rec.note = "indeterminate: " + rec.verdict.message;
    }
    rep.levels.push_back(std::move(rec));
  }
  if (rep.outcome == HierarchyOutcome::undetermined) rep.message = "no level decided";
  return rep;
}

}  // namespace gammahull
