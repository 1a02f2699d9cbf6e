#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "gammahull/freealg.hpp"
#include "gammahull/hermlin.hpp"

namespace gammahull {

// Words of length <= D with their canonical representatives.
class MomentIndex {
 public:
  MomentIndex() = default;
  MomentIndex(int g, int D) : g_(g), D_(D), words_(enumerate_words(g, D)) {
    for (const Word& w : words_) {
      if (canonical(w) == w) {
        rep_pos_.emplace(w, static_cast<int>(reps_.size()));
        reps_.push_back(w);
      }
    }
  }
  int g() const { return g_; }
  int max_degree() const { return D_; }
  const std::vector<Word>& words() const { return words_; }
  const std::vector<Word>& representatives() const { return reps_; }
  bool contains(const Word& w) const { return w.size() <= D_ && w.max_letter() < g_; }
  // Position of canonical(w) in representatives().
  int rep_position(const Word& w) const {
    auto it = rep_pos_.find(canonical(w));
    if (it == rep_pos_.end()) throw std::out_of_range("MomentIndex: word " + w.str() + " exceeds degree");
    return it->second;
  }

 private:
  int g_ = 1;
  int D_ = 0;
  std::vector<Word> words_;
  std::vector<Word> reps_;
  std::map<Word, int> rep_pos_;
};

// Y_alpha for |alpha| <= D, stored on representatives; Y_{alpha*} = Y_alpha^*.
class MomentSequence {
 public:
  MomentSequence() = default;
  MomentSequence(MomentIndex index, int n) : index_(std::move(index)), n_(n) {
    values_.assign(index_.representatives().size(), CMatrix::Zero(n, n));
    values_[0] = CMatrix::Identity(n, n);
  }

  const MomentIndex& index() const { return index_; }
  int n() const { return n_; }
  int g() const { return index_.g(); }
  int max_degree() const { return index_.max_degree(); }

  CMatrix at(const Word& w) const {
    const int p = index_.rep_position(w);
    return canonical(w) == w ? values_[p] : CMatrix(values_[p].adjoint());
  }
  // Sets the value for w (and implicitly w*).
  void set(const Word& w, const CMatrix& v) {
    if (v.rows() != n_ || v.cols() != n_) throw std::invalid_argument("MomentSequence: wrong block size");
    const int p = index_.rep_position(w);
    values_[p] = canonical(w) == w ? v : CMatrix(v.adjoint());
  }
  const std::vector<CMatrix>& representative_values() const { return values_; }

 private:
  MomentIndex index_;
  int n_ = 0;
  std::vector<CMatrix> values_;
};

// Y_alpha = V^* alpha(Z) V for |alpha| <= D.
inline MomentSequence canonical_moments(const std::vector<CMatrix>& Z, const CMatrix& V, int D) {
  const int N = detail::check_tuple(Z);
  if (V.rows() != N) throw std::invalid_argument("canonical_moments: V rows differ from tuple size");
  if (!is_isometry(V, 1e-8)) throw std::invalid_argument("canonical_moments: V is not an isometry");
  MomentSequence Y(MomentIndex(static_cast<int>(Z.size()), D), static_cast<int>(V.cols()));
  detail::WordEvaluator ev(Z);
  for (const Word& w : Y.index().representatives()) Y.set(w, V.adjoint() * ev(w) * V);
  return Y;
}

namespace detail {

inline void require_degree(const MomentSequence& Y, int needed, const char* what) {
  if (Y.max_degree() < needed)
    throw std::invalid_argument(std::string(what) + ": moment sequence degree " + std::to_string(Y.max_degree()) +
                                " is below the required " + std::to_string(needed));
}

// max_j || V^* gamma_j(X) V - gamma_j(V^* X V) ||.
inline double gamma_pair_deviation(const GammaShape& G, const std::vector<CMatrix>& X, const CMatrix& V) {
  std::vector<CMatrix> C;
  for (const auto& x : X) C.push_back(V.adjoint() * x * V);
  double dev = 0.0;
  for (int j = G.g(); j < G.r(); ++j) {
    CMatrix lhs = V.adjoint() * evaluate(G[j], X) * V;
    dev = std::max(dev, (lhs - evaluate(G[j], C)).norm());
  }
  return dev;
}

}  // namespace detail

// Variant that also checks that (Z, V) is a Gamma-pair.
inline MomentSequence canonical_moments(const std::vector<CMatrix>& Z, const CMatrix& V, int D, const GammaShape& G,
                                        double tol = 1e-8) {
  MomentSequence Y = canonical_moments(Z, V, D);
  const double dev = detail::gamma_pair_deviation(G, Z, V);
  if (dev > tol * (1.0 + tuple_norm(Z)))
    throw std::invalid_argument("canonical_moments: (Z, V) is not a Gamma-pair (deviation " + std::to_string(dev) + ")");
  return Y;
}

// H_d(Y) with (alpha, beta) block Y_{alpha* beta}.
inline CMatrix hankel(const MomentSequence& Y, int d) {
  detail::require_degree(Y, 2 * d, "hankel");
  const auto words = enumerate_words(Y.g(), d);
  const int n = Y.n(), W = static_cast<int>(words.size());
  CMatrix H(W * n, W * n);
  for (int a = 0; a < W; ++a)
    for (int b = 0; b < W; ++b) H.block(a * n, b * n, n, n) = Y.at(words[a].adjoint() * words[b]);
  return H;
}

// Localizing matrix: (alpha, beta) block sum_gamma p_gamma (x) Y_{alpha* gamma beta},
// rows ordered (word, coefficient index, moment index).
inline CMatrix localizing(const MomentSequence& Y, const MatrixPolynomial& p, int d) {
  if (!p.is_symmetric()) throw std::invalid_argument("localizing: polynomial is not symmetric");
  if (p.g() != Y.g()) throw std::invalid_argument("localizing: variable count mismatch");
  detail::require_degree(Y, 2 * d + p.degree(), "localizing");
  const auto words = enumerate_words(Y.g(), d);
  const int n = Y.n(), mu = p.mu(), W = static_cast<int>(words.size());
  const int bs = mu * n;
  CMatrix L = CMatrix::Zero(W * bs, W * bs);
  for (int a = 0; a < W; ++a)
    for (int b = 0; b < W; ++b)
      for (const auto& [g, c] : p.terms()) {
        CMatrix y = Y.at(words[a].adjoint() * g * words[b]);
        L.block(a * bs, b * bs, bs, bs) += detail::kron(c, y);
      }
  return L;
}

// One affine relation sum_k c_k Y_{m_k} = C_j per extra Gamma entry.
struct GammaRelation {
  int j = 0;
  std::vector<std::pair<Word, Complex>> terms;
  std::optional<CMatrix> rhs;  // fixed-anchor mode
};

struct GammaConstraintSet {
  std::vector<GammaRelation> relations;
  bool fixed_anchor() const { return relations.empty() || relations.front().rhs.has_value(); }
};

inline GammaConstraintSet gamma_constraints(const GammaShape& G, const std::optional<std::vector<CMatrix>>& anchor,
                                            int D) {
  if (D < G.delta() && G.r() > G.g())
    throw std::invalid_argument("gamma_constraints: degree " + std::to_string(D) + " below Gamma degree");
  if (anchor && static_cast<int>(anchor->size()) != G.g())
    throw std::invalid_argument("gamma_constraints: anchor length mismatch");
  GammaConstraintSet set;
  for (int j = G.g(); j < G.r(); ++j) {
    GammaRelation rel;
    rel.j = j;
    for (const auto& [w, c] : G[j].terms()) rel.terms.push_back({w, c(0, 0)});
    if (anchor) rel.rhs = evaluate(G[j], *anchor);
    set.relations.push_back(std::move(rel));
  }
  return set;
}

struct Violation {
  std::string kind;  // "unit", "adjoint", "gamma", "bound"
  Word word;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

struct ValidationOptions {
  std::optional<double> check_bound_k;
  double tol = 1e-9;
};

inline std::vector<CMatrix> anchor_of(const MomentSequence& Y) {
  std::vector<CMatrix> X;
  for (int i = 0; i < Y.g(); ++i) X.push_back(Y.at(Word::letter(i)));
  return X;
}

inline ValidationReport validate_moment_sequence(const MomentSequence& Y, const GammaShape& G,
                                                 const ValidationOptions& opt = {}) {
  ValidationReport rep;
  const int n = Y.n();
  const double unit = (Y.at(Word()) - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (unit > opt.tol) rep.violations.push_back({"unit", Word(), unit});
  for (const Word& w : Y.index().representatives()) {
    if (!w.is_palindrome()) continue;
    CMatrix v = Y.at(w);
    const double dev = (v - v.adjoint()).cwiseAbs().maxCoeff();
    if (dev > 1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff())) rep.violations.push_back({"adjoint", w, dev});
  }
  if (Y.g() != G.g()) throw std::invalid_argument("validate_moment_sequence: variable count mismatch");
  if (Y.max_degree() >= 1) {
    const auto X = anchor_of(Y);
    for (int j = G.g(); j < G.r(); ++j) {
      if (G[j].degree() > Y.max_degree()) continue;
      CMatrix lhs = CMatrix::Zero(n, n);
      Word worst;
      for (const auto& [w, c] : G[j].terms()) {
        lhs += c(0, 0) * Y.at(w);
        worst = w;
      }
      CMatrix rhs = evaluate(G[j], X);
      const double dev = (lhs - rhs).cwiseAbs().maxCoeff();
      if (dev > opt.tol * std::max(1.0, rhs.cwiseAbs().maxCoeff())) rep.violations.push_back({"gamma", worst, dev});
    }
  }
  if (opt.check_bound_k) {
    const double k = *opt.check_bound_k;
    for (const Word& w : Y.index().representatives()) {
      CMatrix v = Y.at(w);
      Eigen::JacobiSVD<CMatrix> svd(v);
      const double nrm = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      const double lim = std::pow(k, w.size());
      if (nrm > lim * (1.0 + 1e-9)) rep.violations.push_back({"bound", w, nrm - lim});
    }
  }
  return rep;
}

struct FlatnessResult {
  bool flat = false;
  int rank_low = 0;
  int rank_high = 0;
};

// rank H_{eta-d} == rank H_eta.
inline FlatnessResult is_flat(const MomentSequence& Y, int eta, int d, double rel_tol = 1e-8) {
  if (d < 0 || d > eta) throw std::invalid_argument("is_flat: need 0 <= d <= eta");
  detail::require_degree(Y, 2 * eta, "is_flat");
  FlatnessResult r;
  r.rank_high = numerical_rank(hankel(Y, eta), rel_tol);
  r.rank_low = numerical_rank(hankel(Y, eta - d), rel_tol);
  r.flat = r.rank_low == r.rank_high;
  return r;
}

// Exact rational data (real entries only), used to check transcribed
// certificates without rounding.
namespace exact {

using Rational = boost::multiprecision::cpp_rational;
using RationalMatrix = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;

inline Rational to_rational(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("to_rational: non-finite value");
  int e;
  double m = std::frexp(v, &e);
  boost::multiprecision::cpp_int num = static_cast<long long>(std::ldexp(m, 53));
  e -= 53;
  Rational r(num);
  if (e > 0) r *= Rational(boost::multiprecision::cpp_int(1) << e);
  if (e < 0) r /= Rational(boost::multiprecision::cpp_int(1) << -e);
  return r;
}

inline Rational parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
  return Rational(boost::multiprecision::cpp_int(s.substr(0, slash)), boost::multiprecision::cpp_int(s.substr(slash + 1)));
}

inline RMatrix to_double(const RationalMatrix& M) {
  RMatrix out(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out(i, j) = static_cast<double>(M(i, j));
  return out;
}

class RationalMoments {
 public:
  RationalMoments(int g, int D, int n) : index_(g, D), n_(n) {
    values_.assign(index_.representatives().size(), RationalMatrix::Zero(n, n));
    present_.assign(values_.size(), 0);
    values_[0] = RationalMatrix::Identity(n, n);
    present_[0] = 1;
  }
  const MomentIndex& index() const { return index_; }
  int n() const { return n_; }
  bool has(const Word& w) const { return present_[index_.rep_position(w)]; }
  RationalMatrix at(const Word& w) const {
    const int p = index_.rep_position(w);
    if (!present_[p]) throw std::out_of_range("RationalMoments: missing word " + w.str());
    if (canonical(w) == w) return values_[p];
    return values_[p].transpose();
  }
  void set(const Word& w, const RationalMatrix& v) {
    const int p = index_.rep_position(w);
    if (canonical(w) == w) values_[p] = v;
    else values_[p] = v.transpose();
    present_[p] = 1;
  }
  MomentSequence to_double() const {
    MomentSequence Y(index_, n_);
    for (std::size_t p = 0; p < values_.size(); ++p)
      if (present_[p]) Y.set(index_.representatives()[p], exact::to_double(values_[p]).cast<Complex>());
    return Y;
  }

 private:
  MomentIndex index_;
  int n_;
  std::vector<RationalMatrix> values_;
  std::vector<char> present_;
};

// Largest |A - B| entry, exactly.
inline Rational max_abs_diff(const RationalMatrix& A, const RationalMatrix& B) {
  Rational m = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      Rational d = abs(Rational(A(i, j) - B(i, j)));
      if (d > m) m = d;
    }
  return m;
}

inline RationalMatrix matmul(const RationalMatrix& A, const RationalMatrix& B) {
  RationalMatrix C = RationalMatrix::Zero(A.rows(), B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      if (A(i, k) == 0) continue;
      for (Eigen::Index j = 0; j < B.cols(); ++j) C(i, j) += A(i, k) * B(k, j);
    }
  return C;
}

// dst += a * src, written out to keep boost's mixed operators away from Eigen types.
template <typename Dst>
void add_scaled(Dst&& dst, const Rational& a, const RationalMatrix& src) {
  for (Eigen::Index i = 0; i < src.rows(); ++i)
    for (Eigen::Index j = 0; j < src.cols(); ++j) dst(i, j) += a * src(i, j);
}

inline RationalMatrix hankel(const RationalMoments& Y, int d) {
  const auto words = enumerate_words(Y.index().g(), d);
  const int n = Y.n(), W = static_cast<int>(words.size());
  RationalMatrix H(W * n, W * n);
  for (int a = 0; a < W; ++a)
    for (int b = 0; b < W; ++b) H.block(a * n, b * n, n, n) = Y.at(words[a].adjoint() * words[b]);
  return H;
}

inline RationalMatrix real_coefficients(const MatrixPolynomial& p, const Word& w) {
  CMatrix c = p.coefficient(w);
  if (c.imag().cwiseAbs().maxCoeff() != 0.0) throw std::invalid_argument("exact: complex coefficients unsupported");
  RationalMatrix out(c.rows(), c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) out(i, j) = to_rational(c(i, j).real());
  return out;
}

inline RationalMatrix localizing(const RationalMoments& Y, const MatrixPolynomial& p, int d) {
  const auto words = enumerate_words(Y.index().g(), d);
  const int n = Y.n(), mu = p.mu(), W = static_cast<int>(words.size()), bs = mu * n;
  RationalMatrix L = RationalMatrix::Zero(W * bs, W * bs);
  for (int a = 0; a < W; ++a)
    for (int b = 0; b < W; ++b)
      for (const auto& [g, c] : p.terms()) {
        RationalMatrix y = Y.at(words[a].adjoint() * g * words[b]);
        RationalMatrix cr = real_coefficients(p, g);
        for (int i = 0; i < mu; ++i)
          for (int j = 0; j < mu; ++j)
            if (cr(i, j) != 0) add_scaled(L.block(a * bs + i * n, b * bs + j * n, n, n), cr(i, j), y);
      }
  return L;
}

inline RationalMatrix evaluate(const MatrixPolynomial& p, const std::vector<RationalMatrix>& X) {
  const int n = static_cast<int>(X.front().rows()), mu = p.mu();
  RationalMatrix out = RationalMatrix::Zero(mu * n, mu * n);
  for (const auto& [w, c] : p.terms()) {
    RationalMatrix v = RationalMatrix::Identity(n, n);
    for (int l : w.letters()) v = matmul(v, X[l]);
    RationalMatrix cr = real_coefficients(p, w);
    for (int i = 0; i < mu; ++i)
      for (int j = 0; j < mu; ++j)
        if (cr(i, j) != 0) add_scaled(out.block(i * n, j * n, n, n), cr(i, j), v);
  }
  return out;
}

// Exact violations: unit, palindrome symmetry, Gamma relations.
inline ValidationReport validate(const RationalMoments& Y, const GammaShape& G) {
  ValidationReport rep;
  const int n = Y.n();
  if (max_abs_diff(Y.at(Word()), RationalMatrix::Identity(n, n)) != 0) rep.violations.push_back({"unit", Word(), 1.0});
  for (const Word& w : Y.index().representatives()) {
    if (!w.is_palindrome() || !Y.has(w)) continue;
    RationalMatrix v = Y.at(w), vt = v.transpose();
    Rational dev = max_abs_diff(v, vt);
    if (dev != 0) rep.violations.push_back({"adjoint", w, static_cast<double>(dev)});
  }
  std::vector<RationalMatrix> X;
  for (int i = 0; i < G.g(); ++i) X.push_back(Y.at(Word::letter(i)));
  for (int j = G.g(); j < G.r(); ++j) {
    RationalMatrix lhs = RationalMatrix::Zero(n, n);
    Word worst;
    for (const auto& [w, c] : G[j].terms()) {
      if (c(0, 0).imag() != 0.0) throw std::invalid_argument("exact: complex coefficients unsupported");
      add_scaled(lhs, to_rational(c(0, 0).real()), Y.at(w));
      worst = w;
    }
    RationalMatrix rhs = evaluate(G[j], X);
    Rational dev = max_abs_diff(lhs, rhs);
    if (dev != 0) rep.violations.push_back({"gamma", worst, static_cast<double>(dev)});
  }
  return rep;
}

// Exact positive definiteness by symmetric Gaussian elimination.
inline bool positive_definite(RationalMatrix M) {
  const Eigen::Index n = M.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (M(k, k) <= 0) return false;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (M(i, k) == 0) continue;
      Rational f = M(i, k) / M(k, k);
      for (Eigen::Index j = k; j < n; ++j) M(i, j) -= f * M(k, j);
    }
  }
  return true;
}

}  // namespace exact

}  // namespace gammahull
