#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "gammahull/convexity.hpp"
#include "gammahull/freealg.hpp"
#include "gammahull/hermlin.hpp"
#include "gammahull/sdp/model.hpp"

namespace gammahull {

// The solver could neither find a certificate nor prove that none exists.
class IndeterminateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// f = sum_k h_k* h_k + sum_i f_i* p f_i, stored through Gram matrices.
// gram_sos is indexed (word u, a) -> u*nu + a over sos_basis; gram_weighted
// is indexed (word u, s, a) -> (u*mu + s)*nu + a over weighted_basis. With
// beta < 0 there is no weighted part.
struct QmCertificate {
  MatrixPolynomial target;
  MatrixPolynomial p;
  int alpha = 0;
  int beta = -1;
  std::vector<Word> sos_basis;
  std::vector<Word> weighted_basis;
  CMatrix gram_sos;
  CMatrix gram_weighted;
  double recomposition_residual = 0.0;

  int nu() const { return target.rows(); }
  std::vector<MatrixPolynomial> sos_polys(double tol = 1e-12) const;
  std::vector<MatrixPolynomial> weighted_polys(double tol = 1e-12) const;
};

namespace detail {

inline std::vector<Word> qm_basis(int g, int degree) {
  return degree < 0 ? std::vector<Word>{} : enumerate_words(g, degree);
}

// Rank-one factors sqrt(lambda) q of a PSD Gram, returned as conj(q) split
// into rows of `rows` entries per basis word: each factor is a rows x nu
// polynomial sum_u F_u u.
inline std::vector<MatrixPolynomial> gram_factors(const CMatrix& G, const std::vector<Word>& basis, int g, int rows,
                                                  int nu, double tol) {
  std::vector<MatrixPolynomial> out;
  if (G.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (G + G.adjoint()));
  const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index e = 0; e < es.eigenvalues().size(); ++e) {
    const double lam = es.eigenvalues()(e);
    if (lam <= tol * top) continue;
    MatrixPolynomial::Terms terms;
    for (std::size_t u = 0; u < basis.size(); ++u) {
      CMatrix F(rows, nu);
      for (int s = 0; s < rows; ++s)
        for (int a = 0; a < nu; ++a)
          F(s, a) = std::sqrt(lam) * std::conj(es.eigenvectors()((static_cast<int>(u) * rows + s) * nu + a, e));
      terms[basis[u]] = F;
    }
    out.emplace_back(g, rows, nu, std::move(terms));
  }
  return out;
}

}  // namespace detail

inline std::vector<MatrixPolynomial> QmCertificate::sos_polys(double tol) const {
  return detail::gram_factors(gram_sos, sos_basis, target.g(), 1, nu(), tol);
}

inline std::vector<MatrixPolynomial> QmCertificate::weighted_polys(double tol) const {
  return detail::gram_factors(gram_weighted, weighted_basis, target.g(), p.mu(), nu(), tol);
}

// sum_k h_k* h_k + sum_i f_i* p f_i, assembled directly from the Grams.
inline MatrixPolynomial recompose(const QmCertificate& c) {
  const int nu = c.nu(), mu = c.p.mu();
  std::map<Word, CMatrix> acc;
  auto at = [&](const Word& w) -> CMatrix& {
    auto it = acc.find(w);
    if (it == acc.end()) it = acc.emplace(w, CMatrix::Zero(nu, nu)).first;
    return it->second;
  };
  const int ns = static_cast<int>(c.sos_basis.size());
  if (c.gram_sos.rows() != ns * nu || c.gram_sos.cols() != ns * nu)
    throw std::invalid_argument("recompose: SOS Gram has the wrong size");
  for (int u = 0; u < ns; ++u)
    for (int v = 0; v < ns; ++v) {
      CMatrix& C = at(c.sos_basis[u].adjoint() * c.sos_basis[v]);
      C += c.gram_sos.block(u * nu, v * nu, nu, nu);
    }
  const int nw = static_cast<int>(c.weighted_basis.size());
  if (c.gram_weighted.rows() != nw * mu * nu || c.gram_weighted.cols() != nw * mu * nu)
    throw std::invalid_argument("recompose: weighted Gram has the wrong size");
  for (int u = 0; u < nw; ++u)
    for (int v = 0; v < nw; ++v)
      for (const auto& [gam, P] : c.p.terms()) {
        CMatrix& C = at(c.weighted_basis[u].adjoint() * gam * c.weighted_basis[v]);
        for (int s = 0; s < mu; ++s)
          for (int t = 0; t < mu; ++t)
            if (P(s, t) != Complex(0.0))
              C += P(s, t) * c.gram_weighted.block((u * mu + s) * nu, (v * mu + t) * nu, nu, nu);
      }
  return MatrixPolynomial(c.target.g(), nu, nu, acc);
}

inline double max_coefficient_difference(const MatrixPolynomial& a, const MatrixPolynomial& b) {
  double r = 0.0;
  const MatrixPolynomial diff = a - b;
  for (const auto& [w, c] : diff.terms()) r = std::max(r, c.cwiseAbs().maxCoeff());
  return r;
}

// Grows the bases to (alpha, beta) with zero padding; the identity is unchanged.
inline QmCertificate embed(const QmCertificate& c, int alpha, int beta) {
  if (alpha < c.alpha || beta < c.beta) throw std::invalid_argument("embed: degrees can only grow");
  QmCertificate out = c;
  const int g = c.target.g(), nu = c.nu(), mu = c.p.mu();
  out.alpha = alpha;
  out.beta = beta;
  out.sos_basis = detail::qm_basis(g, alpha);
  out.weighted_basis = detail::qm_basis(g, beta);
  const int ns = static_cast<int>(out.sos_basis.size()) * nu;
  const int nw = static_cast<int>(out.weighted_basis.size()) * mu * nu;
  out.gram_sos = CMatrix::Zero(ns, ns);
  out.gram_sos.topLeftCorner(c.gram_sos.rows(), c.gram_sos.cols()) = c.gram_sos;
  out.gram_weighted = CMatrix::Zero(nw, nw);
  out.gram_weighted.topLeftCorner(c.gram_weighted.rows(), c.gram_weighted.cols()) = c.gram_weighted;
  return out;
}

namespace detail {

inline bool polynomial_is_real(const MatrixPolynomial& p) {
  for (const auto& [w, c] : p.terms())
    if (c.imag().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

inline bool tuple_is_real(const std::vector<CMatrix>& X) {
  for (const auto& x : X)
    if (x.imag().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

// Gram unknowns of a truncated quadratic module and the linear expression of
// every coefficient entry (word, a, b) of sum h*h + sum f* p f.
struct QmModel {
  int alpha = 0, beta = -1;
  std::vector<Word> sos_basis, weighted_basis;
  sdp::MatrixVariable sos, weighted;
  bool has_sos = false, has_weighted = false;
  std::map<std::tuple<Word, int, int>, std::map<int, Complex>> coef;

  void add_to(const Word& w, int a, int b, const sdp::MatrixVariable::Terms& terms, Complex scale) {
    auto& e = coef[{w, a, b}];
    for (const auto& [p, c] : terms) e[p] += scale * c;
  }
};

inline void commit_gram(sdp::LmiModel& model, const sdp::MatrixVariable& G, const std::string& name) {
  sdp::BlockBuilder B(G.n());
  for (int r = 0; r < G.n(); ++r)
    for (int c = r; c < G.n(); ++c) B.add(r, c, 0.0, G.entry(r, c));
  B.commit(model, name);
}

inline QmModel build_qm(sdp::LmiModel& model, const MatrixPolynomial& p, int g, int nu, int alpha, int beta, bool real,
                        double bound) {
  QmModel q;
  q.alpha = alpha;
  q.beta = beta;
  q.sos_basis = qm_basis(g, alpha);
  q.weighted_basis = qm_basis(g, beta);
  const int mu = p.mu();
  const int ns = static_cast<int>(q.sos_basis.size()), nw = static_cast<int>(q.weighted_basis.size());
  if (ns) {
    q.sos = sdp::MatrixVariable(model, ns * nu, true, real, -bound, bound);
    q.has_sos = true;
    commit_gram(model, q.sos, "sos");
    for (int u = 0; u < ns; ++u)
      for (int v = 0; v < ns; ++v) {
        const Word w = q.sos_basis[u].adjoint() * q.sos_basis[v];
        for (int a = 0; a < nu; ++a)
          for (int b = 0; b < nu; ++b) q.add_to(w, a, b, q.sos.entry(u * nu + a, v * nu + b), 1.0);
      }
  }
  if (nw) {
    q.weighted = sdp::MatrixVariable(model, nw * mu * nu, true, real, -bound, bound);
    q.has_weighted = true;
    commit_gram(model, q.weighted, "weighted");
    for (int u = 0; u < nw; ++u)
      for (int v = 0; v < nw; ++v)
        for (const auto& [gam, P] : p.terms()) {
          const Word w = q.weighted_basis[u].adjoint() * gam * q.weighted_basis[v];
          for (int s = 0; s < mu; ++s)
            for (int t = 0; t < mu; ++t) {
              if (P(s, t) == Complex(0.0)) continue;
              for (int a = 0; a < nu; ++a)
                for (int b = 0; b < nu; ++b)
                  q.add_to(w, a, b, q.weighted.entry((u * mu + s) * nu + a, (v * mu + t) * nu + b), P(s, t));
            }
        }
  }
  return q;
}

inline QmCertificate extract_qm(const QmModel& q, const MatrixPolynomial& target, const MatrixPolynomial& p,
                                const Eigen::VectorXd& y) {
  QmCertificate c;
  c.target = target;
  c.p = p;
  c.alpha = q.alpha;
  c.beta = q.beta;
  c.sos_basis = q.sos_basis;
  c.weighted_basis = q.weighted_basis;
  c.gram_sos = q.has_sos ? psd_projection(q.sos.value(y)) : CMatrix(0, 0);
  c.gram_weighted = q.has_weighted ? psd_projection(q.weighted.value(y)) : CMatrix(0, 0);
  c.recomposition_residual = max_coefficient_difference(recompose(c), target);
  return c;
}

inline void check_qm_degrees(const MatrixPolynomial& f, const MatrixPolynomial& p, int alpha, int beta) {
  if (alpha < 0) throw std::invalid_argument("qm_membership: alpha must be nonnegative");
  const int reach = std::max(2 * alpha, beta >= 0 ? 2 * beta + p.degree() : 0);
  if (f.degree() > reach)
    throw std::invalid_argument("qm_membership: deg f = " + std::to_string(f.degree()) +
                                " exceeds max(2 alpha, 2 beta + deg p) = " + std::to_string(reach));
}

}  // namespace detail

struct QmOptions {
  sdp::FeasibilityOptions feasibility;
  double gram_bound = 1e3;    // box on Gram entries, times max(1, |f|)
  double accept_tol = 1e-7;   // recomposition residual accepted for a certificate
};

// Truncated quadratic module membership f in QM_{alpha,beta}(p). Returns
// nullopt when infeasibility is certified; throws IndeterminateError otherwise.
inline std::optional<QmCertificate> qm_membership(const MatrixPolynomial& f, const MatrixPolynomial& p, int alpha,
                                                  int beta, const QmOptions& opt = {}) {
  if (!f.is_symmetric()) throw std::invalid_argument("qm_membership: f is not symmetric");
  if (!p.is_symmetric()) throw std::invalid_argument("qm_membership: p is not symmetric");
  if (f.g() != p.g()) throw std::invalid_argument("qm_membership: f and p have different variable counts");
  detail::check_qm_degrees(f, p, alpha, beta);
  const int nu = f.rows();
  double fscale = 1.0;
  for (const auto& [w, c] : f.terms()) fscale = std::max(fscale, c.cwiseAbs().maxCoeff());
  sdp::LmiModel model;
  const bool real = detail::polynomial_is_real(f) && detail::polynomial_is_real(p);
  auto q = detail::build_qm(model, p, f.g(), nu, alpha, beta, real, opt.gram_bound * fscale);
  for (const auto& [w, c] : f.terms())
    for (int a = 0; a < nu; ++a)
      for (int b = 0; b < nu; ++b) q.coef[{w, a, b}];
  for (const auto& [key, terms] : q.coef) {
    const auto& [w, a, b] = key;
    sdp::add_complex_equality(model, terms, f.coefficient(w)(a, b));
  }
  auto res = sdp::decide_feasibility(model, opt.feasibility);
  if (res.verdict == sdp::Feasibility::infeasible) return std::nullopt;
  if (res.y.size()) {
    auto cert = detail::extract_qm(q, f, p, res.y);
    if (cert.recomposition_residual <= opt.accept_tol * fscale) return cert;
  }
  throw IndeterminateError("qm_membership: " + res.message);
}

// k^2 - sum x_i^2 in QM(p), sweeping the weighted degree beta = 0..degree_cap
// with alpha = beta + ceil(deg p / 2).
inline std::optional<QmCertificate> archimedean_certificate(const MatrixPolynomial& p, double k, int degree_cap,
                                                            const QmOptions& opt = {}) {
  if (!(k > 0.0)) throw std::invalid_argument("archimedean_certificate: k must be positive");
  const int g = p.g();
  MatrixPolynomial f = MatrixPolynomial::scalar(g, k * k);
  for (int i = 0; i < g; ++i) f = f - MatrixPolynomial::monomial(g, Word{i, i});
  bool undecided = false;
  std::string why;
  for (int beta = 0; beta <= degree_cap; ++beta) {
    const int alpha = std::max(1, beta + (p.degree() + 1) / 2);
    try {
      if (auto c = qm_membership(f, p, alpha, beta, opt)) return c;
    } catch (const IndeterminateError& e) {
      undecided = true;
      why = e.what();
    }
  }
  if (undecided) throw IndeterminateError("archimedean_certificate: " + why);
  return std::nullopt;
}

struct SeparationCertificate {
  GammaPencil pencil;
  QmCertificate qm;
  double violation = 0.0;  // -lambda_min(pencil(X))
  bool monic = true;
};

// A_0 + sum_j A_j gamma_j as an l x l matrix polynomial.
inline MatrixPolynomial pencil_polynomial(const GammaPencil& L) {
  const GammaShape& G = L.gamma();
  const int l = L.size();
  MatrixPolynomial out = MatrixPolynomial::constant(G.g(), L[0]);
  for (int j = 0; j < G.r(); ++j) {
    MatrixPolynomial::Terms terms;
    for (const auto& [w, c] : G[j].terms()) terms[w] = c(0, 0) * L[j + 1];
    out = out + MatrixPolynomial(G.g(), l, l, std::move(terms));
  }
  return out;
}

struct SeparateOptions {
  sdp::FeasibilityOptions feasibility;
  double coef_bound = 100.0;   // box on pencil coefficients
  double gram_bound = 1e4;
  double min_violation = 1e-6;
  double accept_tol = 1e-7;
  bool affine_fallback = false;  // trace(A_0) = l, A_0 >= eps I when Gamma(0) != 0 or p(0) is not PSD
  double affine_eps = 1e-6;
};

// Quadratic-module degree of the certificate matching lift level d.
inline int separation_degree(const MatrixPolynomial& p, int d) { return 2 * (d + (p.degree() + 1) / 2); }

// Searches a Gamma-pencil L of size n = size(X) with L in QM_N(p) minimizing
// v* L(X) v for v = vec(I)/sqrt(n). QM_N uses SOS words <= N/2 and weighted
// words <= (N - deg p)/2. Returns nullopt when the optimal violation is below
// min_violation.
inline std::optional<SeparationCertificate> separate(const MatrixPolynomial& p, const GammaShape& G,
                                                     const std::vector<CMatrix>& X, int N,
                                                     const SeparateOptions& opt = {}) {
  if (!p.is_symmetric()) throw std::invalid_argument("separate: p is not symmetric");
  if (p.g() != G.g() || static_cast<int>(X.size()) != G.g())
    throw std::invalid_argument("separate: variable counts differ");
  const int n = detail::check_tuple(X);
  for (const auto& x : X)
    if ((x - x.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("separate: point is not Hermitian");
  const bool monic = G.vanishes_at_zero() && min_eigenvalue(p.coefficient(Word())) >= -1e-12;
  if (!monic && !opt.affine_fallback)
    throw std::invalid_argument("separate: needs Gamma(0) = 0 and p(0) >= 0 (or the affine fallback)");
  const int alpha = N / 2, beta = (N - p.degree()) >= 0 ? (N - p.degree()) / 2 : -1;
  if (2 * alpha < G.delta()) throw std::invalid_argument("separate: degree N is below deg Gamma");
  const int g = G.g(), r = G.r(), l = n;
  const bool real = detail::polynomial_is_real(p) && detail::tuple_is_real(X);
  sdp::LmiModel model;
  std::vector<sdp::MatrixVariable> C;
  for (int j = 0; j < r; ++j) C.emplace_back(model, l, true, real, -opt.coef_bound, opt.coef_bound);
  sdp::MatrixVariable A0;
  if (!monic) {
    A0 = sdp::MatrixVariable(model, l, true, real, -opt.coef_bound, opt.coef_bound);
    sdp::BlockBuilder B(l);
    for (int a = 0; a < l; ++a)
      for (int b = a; b < l; ++b) B.add(a, b, a == b ? -opt.affine_eps : 0.0, A0.entry(a, b));
    B.commit(model, "a0");
    std::map<int, Complex> tr;
    for (int a = 0; a < l; ++a)
      for (auto& [q, c] : A0.entry(a, a)) tr[q] += c;
    sdp::add_complex_equality(model, tr, static_cast<double>(l));
  }
  auto q = detail::build_qm(model, p, g, l, alpha, beta, real, opt.gram_bound);
  for (int j = 0; j < r; ++j)
    for (const auto& [w, c] : G[j].terms())
      for (int a = 0; a < l; ++a)
        for (int b = 0; b < l; ++b) q.add_to(w, a, b, C[j].entry(a, b), -c(0, 0));
  if (!monic)
    for (int a = 0; a < l; ++a)
      for (int b = 0; b < l; ++b) q.add_to(Word(), a, b, A0.entry(a, b), -1.0);
  for (int a = 0; a < l; ++a) q.coef[{Word(), a, a}];
  for (const auto& [key, terms] : q.coef) {
    const auto& [w, a, b] = key;
    const Complex rhs = monic && w.empty() && a == b ? 1.0 : 0.0;
    sdp::add_complex_equality(model, terms, rhs);
  }
  // maximize -v* L(X) v = -1 - sum_j tr(C_j gamma_j(X)^T) / n, since tr A_0 = n.
  const auto GX = gamma_map(G, X);
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(model.num_params());
  for (int j = 0; j < r; ++j)
    for (int a = 0; a < l; ++a)
      for (int b = 0; b < l; ++b)
        for (auto& [prm, c] : C[j].entry(a, b)) obj(prm) -= (c * GX[j](a, b)).real() / n;
  auto res = sdp::optimize(model, obj, opt.feasibility);
  if (res.status == sdp::Status::infeasible_certified)
    throw IndeterminateError("separate: certificate SDP reported infeasible (" + res.message + ")");
  // A stalled solve may still end at a usable point; the certificate is
  // re-verified below either way.
  if (res.status != sdp::Status::optimal && (res.y.size() == 0 || !res.y.allFinite()))
    throw IndeterminateError("separate: " + res.message);
  std::vector<CMatrix> coeffs{monic ? CMatrix(CMatrix::Identity(l, l)) : A0.value(res.y)};
  for (int j = 0; j < r; ++j) coeffs.push_back(C[j].value(res.y));
  SeparationCertificate cert;
  cert.pencil = GammaPencil(G, coeffs);
  cert.monic = monic;
  cert.violation = -min_eigenvalue(evaluate(cert.pencil, X));
  if (cert.violation < opt.min_violation) {
    if (res.status != sdp::Status::optimal) throw IndeterminateError("separate: " + res.message);
    return std::nullopt;
  }
  cert.qm = detail::extract_qm(q, pencil_polynomial(cert.pencil), p, res.y);
  if (cert.qm.recomposition_residual > opt.accept_tol)
    throw IndeterminateError("separate: recomposition residual " + std::to_string(cert.qm.recomposition_residual) +
                             (res.status == sdp::Status::optimal ? "" : " after " + res.message));
  return cert;
}

struct VerificationReport {
  bool ok = false;
  double recomposition_residual = 0.0;
  double gram_sos_min_eig = 0.0;
  double gram_weighted_min_eig = 0.0;
  double gram_tol = 0.0;
  std::optional<double> violation;
  std::vector<std::string> failures;
};

struct VerifyOptions {
  double residual_tol = 1e-7;
  double gram_rel_tol = 1e-9;
  double min_violation = 1e-6;
};

// Independent re-check of the identity from the Gram data alone.
inline VerificationReport verify_certificate(const QmCertificate& c, const VerifyOptions& opt = {}) {
  VerificationReport r;
  auto min_eig = [](const CMatrix& M) {
    return M.size() ? min_eigenvalue(CMatrix(0.5 * (M + M.adjoint()))) : std::numeric_limits<double>::infinity();
  };
  double scale = 1.0;
  if (c.gram_sos.size()) scale = std::max(scale, c.gram_sos.cwiseAbs().maxCoeff());
  if (c.gram_weighted.size()) scale = std::max(scale, c.gram_weighted.cwiseAbs().maxCoeff());
  r.gram_tol = opt.gram_rel_tol * scale;
  try {
    r.recomposition_residual = max_coefficient_difference(recompose(c), c.target);
  } catch (const std::exception& e) {
    r.failures.push_back(e.what());
    return r;
  }
  r.gram_sos_min_eig = min_eig(c.gram_sos);
  r.gram_weighted_min_eig = min_eig(c.gram_weighted);
  if (r.recomposition_residual > opt.residual_tol)
    r.failures.push_back("recomposition residual " + std::to_string(r.recomposition_residual));
  if (r.gram_sos_min_eig < -r.gram_tol) r.failures.push_back("SOS Gram is not PSD");
  if (r.gram_weighted_min_eig < -r.gram_tol) r.failures.push_back("weighted Gram is not PSD");
  if (c.gram_sos.size() && (c.gram_sos - c.gram_sos.adjoint()).cwiseAbs().maxCoeff() > r.gram_tol)
    r.failures.push_back("SOS Gram is not Hermitian");
  if (c.gram_weighted.size() && (c.gram_weighted - c.gram_weighted.adjoint()).cwiseAbs().maxCoeff() > r.gram_tol)
    r.failures.push_back("weighted Gram is not Hermitian");
  r.ok = r.failures.empty();
  return r;
}

inline VerificationReport verify_certificate(const SeparationCertificate& c, const MatrixPolynomial& p,
                                             const std::optional<std::vector<CMatrix>>& X = std::nullopt,
                                             const VerifyOptions& opt = {}) {
  QmCertificate qm = c.qm;
  qm.target = pencil_polynomial(c.pencil);
  VerificationReport r;
  if (!(qm.p == p)) {
    r.failures.push_back("certificate was built for a different p");
    return r;
  }
  r = verify_certificate(qm, opt);
  if (max_coefficient_difference(c.qm.target, qm.target) > opt.residual_tol)
    r.failures.push_back("stored target differs from the pencil");
  if (c.monic && !c.pencil.monic(1e-12)) r.failures.push_back("pencil is labeled monic but A_0 != I");
  if (X) {
    r.violation = -min_eigenvalue(evaluate(c.pencil, *X));
    if (*r.violation < opt.min_violation) r.failures.push_back("no violation at the point");
  }
  r.ok = r.failures.empty();
  return r;
}

}  // namespace gammahull
