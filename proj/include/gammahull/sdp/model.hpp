#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gammahull/sdp/external.hpp"
#include "gammahull/sdp/problem.hpp"
#include "gammahull/sdp/solver.hpp"

namespace gammahull::sdp {

using Complex = std::complex<double>;

// Hermitian blocks affine in real parameters, linear equalities and a box.
// Blocks are stored as a constant plus terms (row <= col) that contribute
// coef*y at (row,col) and conj(coef)*y at (col,row).
class LmiModel {
 public:
  struct Term {
    int row;
    int col;
    int param;
    Complex coef;
  };
  struct Block {
    std::string name;
    int dim = 0;
    Eigen::MatrixXcd constant;
    std::vector<Term> terms;
  };
  struct Equality {
    std::vector<std::pair<int, double>> coefs;
    double rhs = 0.0;
  };

  int add_params(int count, double lower, double upper) {
    const int first = num_params();
    for (int i = 0; i < count; ++i) {
      lower_.push_back(lower);
      upper_.push_back(upper);
    }
    return first;
  }
  void set_bounds(int param, double lower, double upper) {
    lower_.at(param) = lower;
    upper_.at(param) = upper;
  }
  int num_params() const { return static_cast<int>(lower_.size()); }
  double lower(int i) const { return lower_[i]; }
  double upper(int i) const { return upper_[i]; }

  int add_block(std::string name, const Eigen::MatrixXcd& constant) {
    if (constant.rows() != constant.cols()) throw std::invalid_argument("LmiModel: block constant must be square");
    blocks_.push_back({std::move(name), static_cast<int>(constant.rows()), constant, {}});
    return static_cast<int>(blocks_.size()) - 1;
  }
  int add_block(std::string name, int dim) { return add_block(std::move(name), Eigen::MatrixXcd::Zero(dim, dim)); }
  void add_constant(int block, int row, int col, Complex v) {
    auto& B = blocks_.at(block);
    B.constant(row, col) += v;
    if (row != col) B.constant(col, row) += std::conj(v);
  }
  void add_term(int block, int row, int col, int param, Complex coef) {
    if (coef == Complex(0.0)) return;
    auto& B = blocks_.at(block);
    if (param < 0 || param >= num_params()) throw std::out_of_range("LmiModel: parameter out of range");
    if (row < 0 || col < 0 || row >= B.dim || col >= B.dim) throw std::out_of_range("LmiModel: entry out of range");
    if (row > col) {
      std::swap(row, col);
      coef = std::conj(coef);
    }
    if (row == col && coef.imag() != 0.0) throw std::invalid_argument("LmiModel: diagonal coefficient must be real");
    B.terms.push_back({row, col, param, coef});
  }
  void add_equality(std::vector<std::pair<int, double>> coefs, double rhs) {
    equalities_.push_back({std::move(coefs), rhs});
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Equality>& equalities() const { return equalities_; }

  // Block value at a parameter point.
  Eigen::MatrixXcd block_value(int b, const Eigen::VectorXd& y) const {
    const auto& B = blocks_.at(b);
    Eigen::MatrixXcd M = B.constant;
    for (const auto& t : B.terms) {
      M(t.row, t.col) += t.coef * y(t.param);
      if (t.row != t.col) M(t.col, t.row) += std::conj(t.coef) * y(t.param);
    }
    return M;
  }
  double equality_residual(const Eigen::VectorXd& y) const {
    double r = 0.0;
    for (const auto& e : equalities_) {
      double s = -e.rhs;
      for (const auto& [i, c] : e.coefs) s += c * y(i);
      r = std::max(r, std::abs(s));
    }
    return r;
  }

 private:
  std::vector<double> lower_, upper_;
  std::vector<Block> blocks_;
  std::vector<Equality> equalities_;
};

// Matrix unknown whose entries are affine in model parameters. Hermitian
// variables use real diagonals and (re, im) pairs above the diagonal; in real
// mode the imaginary parameters are omitted.
class MatrixVariable {
 public:
  using Terms = std::vector<std::pair<int, Complex>>;

  MatrixVariable() = default;
  MatrixVariable(LmiModel& model, int n, bool hermitian, bool real, double lower, double upper)
      : n_(n), hermitian_(hermitian), re_(n * n, -1), im_(n * n, -1) {
    for (int i = 0; i < n; ++i)
      for (int j = hermitian ? i : 0; j < n; ++j) {
        re_[i * n + j] = model.add_params(1, lower, upper);
        if (!real && !(hermitian && i == j)) im_[i * n + j] = model.add_params(1, lower, upper);
      }
  }
  int n() const { return n_; }

  Terms entry(int i, int j) const {
    Terms t;
    if (hermitian_ && i > j) {
      for (auto& [p, c] : entry(j, i)) t.push_back({p, std::conj(c)});
      return t;
    }
    if (re_[i * n_ + j] >= 0) t.push_back({re_[i * n_ + j], 1.0});
    if (im_[i * n_ + j] >= 0) t.push_back({im_[i * n_ + j], Complex(0, 1)});
    return t;
  }
  Eigen::MatrixXcd value(const Eigen::VectorXd& y) const {
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (auto& [p, c] : entry(i, j)) M(i, j) += c * y(p);
    return M;
  }
  std::vector<int> params() const {
    std::vector<int> out;
    for (int p : re_)
      if (p >= 0) out.push_back(p);
    for (int p : im_)
      if (p >= 0) out.push_back(p);
    return out;
  }

 private:
  int n_ = 0;
  bool hermitian_ = true;
  std::vector<int> re_, im_;
};

// Accumulates a Hermitian block entrywise (upper triangle) before committing
// it to a model, so that contributions whose imaginary parts cancel on the
// diagonal are merged first.
class BlockBuilder {
 public:
  explicit BlockBuilder(int dim) : dim_(dim) {}
  int dim() const { return dim_; }

  // Adds v + sum coef*y_param at (r, c); entries below the diagonal are ignored.
  void add(int r, int c, Complex v, const MatrixVariable::Terms& terms = {}, Complex scale = 1.0) {
    if (r > c) return;
    auto& e = entries_[{r, c}];
    e.constant += scale * v;
    for (auto& [p, k] : terms) e.coef[p] += scale * k;
  }
  // Adds C (x) Y at offset (r0, c0).
  void add_kron(int r0, int c0, const Eigen::MatrixXcd& C, const MatrixVariable& Y) {
    const int n = Y.n();
    for (int s = 0; s < C.rows(); ++s)
      for (int t = 0; t < C.cols(); ++t) {
        if (C(s, t) == Complex(0.0)) continue;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const int r = r0 + s * n + i, c = c0 + t * n + j;
            if (r <= c) add(r, c, 0.0, Y.entry(i, j), C(s, t));
          }
      }
  }
  // Adds the constant matrix M at offset (r0, c0).
  void add_constant(int r0, int c0, const Eigen::MatrixXcd& M) {
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j)
        if (M(i, j) != Complex(0.0)) add(r0 + i, c0 + j, M(i, j));
  }

  int commit(LmiModel& model, const std::string& name) const {
    const int b = model.add_block(name, dim_);
    for (const auto& [rc, e] : entries_) {
      const auto [r, c] = rc;
      double scale = std::abs(e.constant);
      for (auto& [p, k] : e.coef) scale = std::max(scale, std::abs(k));
      auto clean = [&](Complex v) {
        if (r != c) return v;
        if (std::abs(v.imag()) > 1e-10 * std::max(1.0, scale))
          throw std::logic_error("BlockBuilder: block is not Hermitian on the diagonal");
        return Complex(v.real(), 0.0);
      };
      const Complex k0 = clean(e.constant);
      if (k0 != Complex(0.0)) model.add_constant(b, r, c, k0);
      for (auto& [p, k] : e.coef) model.add_term(b, r, c, p, clean(k));
    }
    return b;
  }

 private:
  struct Acc {
    Complex constant = 0.0;
    std::map<int, Complex> coef;
  };
  int dim_;
  std::map<std::pair<int, int>, Acc> entries_;
};

// Adds sum_k coefs_k * terms_k == rhs as real equalities (real part, and the
// imaginary part unless it is identically zero).
inline void add_complex_equality(LmiModel& model, const std::map<int, Complex>& coefs, Complex rhs) {
  std::vector<std::pair<int, double>> re, im;
  for (auto& [p, c] : coefs) {
    if (c.real() != 0.0) re.push_back({p, c.real()});
    if (c.imag() != 0.0) im.push_back({p, c.imag()});
  }
  if (!re.empty() || rhs.real() != 0.0) model.add_equality(std::move(re), rhs.real());
  if (!im.empty() || rhs.imag() != 0.0) model.add_equality(std::move(im), rhs.imag());
}

// y = y0 + N z after eliminating equalities; blocks restricted to kept rows
// after facial reduction.
struct Presolved {
  bool infeasible = false;
  std::string reason;
  Eigen::VectorXd y0;
  Eigen::MatrixXd N;
  std::vector<int> free_params;              // z_k equals y[free_params[k]]
  std::vector<std::vector<int>> kept_rows;   // per block
  std::vector<int> kernel_dims;              // per block
  std::vector<LmiModel::Equality> derived;   // equalities found by facial reduction
  int rounds = 0;

  Eigen::VectorXd lift(const Eigen::VectorXd& z) const { return y0 + N * z; }
};

namespace detail {

struct SparseRow {
  std::vector<std::pair<int, double>> entries;
};

// Eliminates A y = b; returns false when inconsistent.
inline bool eliminate(int m, const std::vector<LmiModel::Equality>& eqs, Eigen::VectorXd& y0, Eigen::MatrixXd& N,
                      std::vector<int>& free_params, std::string& why) {
  const int q = static_cast<int>(eqs.size());
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(q, m);
  Eigen::VectorXd b(q);
  for (int r = 0; r < q; ++r) {
    for (const auto& [i, c] : eqs[r].coefs) E(r, i) += c;
    b(r) = eqs[r].rhs;
  }
  std::vector<double> rowscale(q);
  for (int r = 0; r < q; ++r) rowscale[r] = std::max({1.0, E.row(r).cwiseAbs().maxCoeff(), std::abs(b(r))});
  std::vector<int> pivot_col_of_row;
  std::vector<int> pivot_rows;
  std::vector<char> used(q, 0);
  std::vector<int> pivot_of_col(m, -1);
  // Columns are processed last to first so that later (longer-word) parameters
  // are preferred as dependent ones.
  for (int j = m - 1; j >= 0; --j) {
    int best = -1;
    double bv = 0.0;
    for (int r = 0; r < q; ++r) {
      if (used[r]) continue;
      const double v = std::abs(E(r, j)) / rowscale[r];
      if (v > bv) {
        bv = v;
        best = r;
      }
    }
    if (best < 0 || bv <= 1e-10) continue;
    used[best] = 1;
    pivot_of_col[j] = best;
    const double piv = E(best, j);
    E.row(best) /= piv;
    b(best) /= piv;
    for (int r = 0; r < q; ++r) {
      if (r == best) continue;
      const double f = E(r, j);
      if (f == 0.0) continue;
      E.row(r) -= f * E.row(best);
      b(r) -= f * b(best);
      E(r, j) = 0.0;
    }
  }
  for (int r = 0; r < q; ++r) {
    if (used[r]) continue;
    if (std::abs(b(r)) > 1e-8 * rowscale[r]) {
      why = "inconsistent linear equalities (residual " + std::to_string(std::abs(b(r))) + ")";
      return false;
    }
  }
  free_params.clear();
  for (int j = 0; j < m; ++j)
    if (pivot_of_col[j] < 0) free_params.push_back(j);
  const int k = static_cast<int>(free_params.size());
  y0 = Eigen::VectorXd::Zero(m);
  N = Eigen::MatrixXd::Zero(m, k);
  for (int c = 0; c < k; ++c) N(free_params[c], c) = 1.0;
  for (int j = 0; j < m; ++j) {
    const int r = pivot_of_col[j];
    if (r < 0) continue;
    y0(j) = b(r);
    for (int c = 0; c < k; ++c) {
      const double v = E(r, free_params[c]);
      if (std::abs(v) > 1e-14) N(j, c) = -v;
    }
  }
  return true;
}

// Substituted block: per upper entry, constant and z-coefficients.
struct SubEntry {
  Complex constant{0.0};
  std::map<int, Complex> coef;
};

inline std::vector<std::map<std::pair<int, int>, SubEntry>> substitute(const LmiModel& model, const Eigen::VectorXd& y0,
                                                                         const Eigen::MatrixXd& N) {
  std::vector<std::vector<std::pair<int, double>>> Nrows(N.rows());
  for (Eigen::Index i = 0; i < N.rows(); ++i)
    for (Eigen::Index c = 0; c < N.cols(); ++c)
      if (N(i, c) != 0.0) Nrows[i].push_back({static_cast<int>(c), N(i, c)});
  std::vector<std::map<std::pair<int, int>, SubEntry>> out;
  for (const auto& B : model.blocks()) {
    std::map<std::pair<int, int>, SubEntry> entries;
    for (int r = 0; r < B.dim; ++r)
      for (int c = r; c < B.dim; ++c)
        if (B.constant(r, c) != Complex(0.0)) entries[{r, c}].constant += B.constant(r, c);
    for (const auto& t : B.terms) {
      auto& e = entries[{t.row, t.col}];
      e.constant += t.coef * y0(t.param);
      for (const auto& [c, v] : Nrows[t.param]) e.coef[c] += t.coef * v;
    }
    out.push_back(std::move(entries));
  }
  return out;
}

inline double entry_scale(const LmiModel::Block& B) {
  double s = 1.0;
  if (B.dim) s = std::max(s, B.constant.cwiseAbs().maxCoeff());
  for (const auto& t : B.terms) s = std::max(s, std::abs(t.coef));
  return s;
}

}  // namespace detail

struct PresolveOptions {
  bool facial_reduction = true;
  int max_rounds = 12;
  double kernel_tol = 1e-9;
};

inline Presolved presolve(const LmiModel& model, const PresolveOptions& opt = {}) {
  Presolved P;
  const int m = model.num_params();
  const int nb = static_cast<int>(model.blocks().size());
  std::vector<LmiModel::Equality> eqs = model.equalities();
  // Per block: reduced kernel basis (columns) with pivots.
  std::vector<std::vector<Eigen::VectorXcd>> kernels(nb);
  std::vector<std::vector<int>> pivots(nb);
  for (P.rounds = 0;; ++P.rounds) {
    if (!detail::eliminate(m, eqs, P.y0, P.N, P.free_params, P.reason)) {
      P.infeasible = true;
      return P;
    }
    if (!opt.facial_reduction || P.rounds >= opt.max_rounds) break;
    auto sub = detail::substitute(model, P.y0, P.N);
    bool added = false;
    for (int b = 0; b < nb; ++b) {
      const auto& B = model.blocks()[b];
      const double scale = detail::entry_scale(B);
      const double ztol = 1e-11 * scale;
      auto is_const = [&](int r, int c) {
        if (r > c) std::swap(r, c);
        auto it = sub[b].find({r, c});
        if (it == sub[b].end()) return true;
        for (const auto& [k, v] : it->second.coef)
          if (std::abs(v) > ztol) return false;
        return true;
      };
      auto value = [&](int r, int c) -> Complex {
        const bool swap = r > c;
        auto it = sub[b].find({std::min(r, c), std::max(r, c)});
        if (it == sub[b].end()) return 0.0;
        return swap ? std::conj(it->second.constant) : it->second.constant;
      };
      auto entry = [&](int r, int c) -> detail::SubEntry {
        const bool swap = r > c;
        auto it = sub[b].find({std::min(r, c), std::max(r, c)});
        if (it == sub[b].end()) return {};
        if (!swap) return it->second;
        detail::SubEntry e{std::conj(it->second.constant), {}};
        for (const auto& [k, v] : it->second.coef) e.coef[k] = std::conj(v);
        return e;
      };
      // e = lambda f, where f(ref) = fv is the largest component of f (ref -1 is the constant).
      auto ratio = [&](const detail::SubEntry& e, const detail::SubEntry& f, int ref, Complex fv) -> std::optional<Complex> {
        Complex ev = e.constant;
        if (ref >= 0) {
          auto it = e.coef.find(ref);
          ev = it == e.coef.end() ? Complex(0.0) : it->second;
        }
        const Complex lam = ev / fv;
        double emax = std::abs(e.constant), dev = std::abs(e.constant - lam * f.constant);
        for (const auto& [k, v] : e.coef) emax = std::max(emax, std::abs(v));
        std::map<int, Complex> diff = e.coef;
        for (const auto& [k, v] : f.coef) diff[k] -= lam * v;
        for (const auto& [k, v] : diff) dev = std::max(dev, std::abs(v));
        if (dev > 1e-9 * std::max(emax, ztol)) return std::nullopt;
        return lam;
      };
      auto add_kernel = [&](const std::vector<int>& S, const Eigen::VectorXcd& v) {
        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(B.dim);
        for (std::size_t i = 0; i < S.size(); ++i) u(S[i]) = v(static_cast<Eigen::Index>(i));
        const double unorm = u.cwiseAbs().maxCoeff();
        for (std::size_t q = 0; q < kernels[b].size(); ++q) u -= u(pivots[b][q]) * kernels[b][q];
        Eigen::Index piv;
        const double mx = u.cwiseAbs().maxCoeff(&piv);
        if (mx <= 1e-8 * unorm) return true;
        u /= u(piv);
        for (auto& w : kernels[b]) w -= w(piv) * u;
        kernels[b].push_back(u);
        pivots[b].push_back(static_cast<int>(piv));
        added = true;
        // Equalities M(y) u = 0 row by row, real and imaginary parts.
        std::vector<std::map<int, Complex>> rows(B.dim);
        Eigen::VectorXcd cu = B.constant * u;
        for (const auto& t : B.terms) {
          rows[t.row][t.param] += t.coef * u(t.col);
          if (t.row != t.col) rows[t.col][t.param] += std::conj(t.coef) * u(t.row);
        }
        for (int r = 0; r < B.dim; ++r) {
          for (int part = 0; part < 2; ++part) {
            LmiModel::Equality eq;
            for (const auto& [p, w] : rows[r]) {
              const double c = part == 0 ? w.real() : w.imag();
              if (std::abs(c) > 1e-14 * scale) eq.coefs.push_back({p, c});
            }
            eq.rhs = -(part == 0 ? cu(r).real() : cu(r).imag());
            if (eq.coefs.empty()) {
              if (std::abs(eq.rhs) > 1e-8 * scale) {
                P.infeasible = true;
                P.reason = "facial reduction produced an inconsistent equality in block '" + B.name + "'";
                return false;
              }
              continue;
            }
            eqs.push_back(eq);
            P.derived.push_back(std::move(eq));
          }
        }
        return true;
      };
      std::vector<char> pivot_row(B.dim, 0);
      for (int p : pivots[b]) pivot_row[p] = 1;
      // Row sets on which every entry is a fixed multiple of one affine
      // function f (f = 1 for constant entries): M_S = f(z) K.
      std::vector<char> covered(B.dim, 0);
      for (int s = 0; s < B.dim; ++s) {
        if (pivot_row[s] || covered[s]) continue;
        const bool constant = is_const(s, s);
        detail::SubEntry f;
        int ref = -1;
        Complex fv = 1.0;
        if (constant) {
          f.constant = 1.0;
        } else {
          f = entry(s, s);
          double best = std::abs(f.constant);
          fv = f.constant;
          for (const auto& [k, v] : f.coef)
            if (std::abs(v) > best) {
              best = std::abs(v);
              ref = k;
              fv = v;
            }
        }
        std::vector<int> S{s};
        for (int r = s + 1; r < B.dim; ++r) {
          if (pivot_row[r] || covered[r]) continue;
          if (constant != is_const(r, r)) continue;
          bool ok = true;
          for (int t : S) {
            const bool c = constant ? is_const(r, t) : ratio(entry(r, t), f, ref, fv).has_value();
            if (!c) {
              ok = false;
              break;
            }
          }
          if (constant || ratio(entry(r, r), f, ref, fv)) {
            if (ok) S.push_back(r);
          }
        }
        for (int r : S) covered[r] = 1;
        const int k = static_cast<int>(S.size());
        Eigen::MatrixXcd K(k, k);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j)
            K(i, j) = constant ? value(S[i], S[j]) : *ratio(entry(S[i], S[j]), f, ref, fv);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(K);
        const Eigen::VectorXd& ev = es.eigenvalues();
        const double tol = opt.kernel_tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
        if (ev(0) < -tol) {
          if (constant) {
            P.infeasible = true;
            P.reason = "block '" + B.name + "' has a fixed principal submatrix with eigenvalue " + std::to_string(ev(0));
            return P;
          }
          if (ev(k - 1) > tol) {
            // K indefinite: only f = 0 keeps f K semidefinite.
            LmiModel::Equality eq;
            for (const auto& [c, v] : f.coef)
              if (std::abs(v.real()) > 1e-14 * scale) eq.coefs.push_back({P.free_params[c], v.real()});
            eq.rhs = -f.constant.real();
            eqs.push_back(eq);
            P.derived.push_back(std::move(eq));
            added = true;
            continue;
          }
          es.compute(-K);
        }
        if (!constant && k == 1) continue;
        for (int e = 0; e < k && es.eigenvalues()(e) <= tol; ++e)
          if (!add_kernel(S, es.eigenvectors().col(e))) return P;
      }
    }
    if (!added) break;
  }
  P.kept_rows.resize(nb);
  P.kernel_dims.resize(nb);
  for (int b = 0; b < nb; ++b) {
    std::vector<char> piv(model.blocks()[b].dim, 0);
    for (int p : pivots[b]) piv[p] = 1;
    for (int r = 0; r < model.blocks()[b].dim; ++r)
      if (!piv[r]) P.kept_rows[b].push_back(r);
    P.kernel_dims[b] = static_cast<int>(pivots[b].size());
  }
  return P;
}

struct ModelSdp {
  SdpProblem problem;
  int margin_var = -1;  // 0-based, -1 if absent
  double objective_offset = 0.0;
};

// Builds the SDP in z (and an optional margin variable t, last, capped at t_cap).
inline ModelSdp build_sdp(const LmiModel& model, const Presolved& P, const Eigen::VectorXd* objective_y, bool margin,
                          double t_cap = 1.0) {
  const int k = static_cast<int>(P.free_params.size());
  const int nb = static_cast<int>(model.blocks().size());
  ModelSdp out;
  SdpProblem& sp = out.problem;
  sp.num_vars = k + (margin ? 1 : 0);
  sp.objective = Eigen::VectorXd::Zero(sp.num_vars);
  if (margin) {
    out.margin_var = k;
    sp.objective(k) = 1.0;
  }
  if (objective_y) {
    sp.objective.head(k) = P.N.transpose() * (*objective_y);
    out.objective_offset = objective_y->dot(P.y0);
  }
  auto sub = detail::substitute(model, P.y0, P.N);
  for (int b = 0; b < nb; ++b) {
    const auto& B = model.blocks()[b];
    const auto& K = P.kept_rows[b];
    const int kd = static_cast<int>(K.size());
    if (kd == 0) continue;
    std::vector<int> pos(B.dim, -1);
    for (int i = 0; i < kd; ++i) pos[K[i]] = i;
    const double ztol = 1e-14 * detail::entry_scale(B);
    bool complex_data = false;
    for (const auto& [rc, e] : sub[b]) {
      if (pos[rc.first] < 0 || pos[rc.second] < 0) continue;
      if (std::abs(e.constant.imag()) > ztol) complex_data = true;
      for (const auto& [c, v] : e.coef)
        if (std::abs(v.imag()) > ztol) complex_data = true;
    }
    const int blk = sp.num_blocks();
    const int dim = complex_data ? 2 * kd : kd;
    sp.block_dims.push_back(dim);
    auto emit = [&](int var, int r, int c, Complex v) {
      if (!complex_data) {
        if (v.real() != 0.0) sp.add(var, blk, r, c, v.real());
        return;
      }
      if (v.real() != 0.0) {
        sp.add(var, blk, r, c, v.real());
        sp.add(var, blk, kd + r, kd + c, v.real());
      }
      if (r != c && v.imag() != 0.0) {
        sp.add(var, blk, r, kd + c, -v.imag());
        sp.add(var, blk, c, kd + r, v.imag());
      }
    };
    for (const auto& [rc, e] : sub[b]) {
      const int r = pos[rc.first], c = pos[rc.second];
      if (r < 0 || c < 0) continue;
      if (std::abs(e.constant) > ztol) emit(0, r, c, e.constant);
      for (const auto& [z, v] : e.coef)
        if (std::abs(v) > ztol) emit(z + 1, r, c, v);
    }
    if (margin)
      for (int i = 0; i < dim; ++i) sp.add(k + 1, blk, i, i, -1.0);
  }
  // Box rows on all non-fixed parameters, plus t <= t_cap.
  std::vector<std::pair<int, int>> rows;  // (param, sign)
  for (int i = 0; i < model.num_params(); ++i) {
    if (P.N.cols() == 0 || P.N.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
    rows.push_back({i, +1});
    rows.push_back({i, -1});
  }
  const int nrows = static_cast<int>(rows.size()) + (margin ? 1 : 0);
  if (nrows > 0) {
    const int blk = sp.num_blocks();
    sp.block_dims.push_back(-nrows);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto [i, s] = rows[r];
      const double cst = s > 0 ? P.y0(i) - model.lower(i) : model.upper(i) - P.y0(i);
      if (cst != 0.0) sp.add(0, blk, r, r, cst);
      for (int c = 0; c < k; ++c)
        if (P.N(i, c) != 0.0) sp.add(c + 1, blk, r, r, s * P.N(i, c));
    }
    if (margin) {
      const int r = static_cast<int>(rows.size());
      sp.add(0, blk, r, r, t_cap);
      sp.add(k + 1, blk, r, r, -1.0);
    }
  }
  return out;
}

enum class Feasibility { feasible, infeasible, marginal, indeterminate };

inline std::string to_string(Feasibility f) {
  switch (f) {
    case Feasibility::feasible: return "feasible";
    case Feasibility::infeasible: return "infeasible";
    case Feasibility::marginal: return "marginal";
    case Feasibility::indeterminate: return "indeterminate";
  }
  return "unknown";
}

struct FeasibilityResult {
  Feasibility verdict = Feasibility::indeterminate;
  double margin = 0.0;          // min over blocks of lambda_min on kept rows at y
  double dual_bound = 0.0;      // certified upper bound on the achievable margin
  Eigen::VectorXd y;            // parameters (empty when presolve proves infeasibility)
  std::vector<double> block_margins;  // lambda_min of each full block at y
  double equality_residual = 0.0;
  Presolved presolve;
  SdpSolution solution;
  std::string message;
};

struct FeasibilityOptions {
  SolverOptions solver;
  PresolveOptions presolve;
  double feas_margin = 1e-7;
  double t_cap = 1.0;
  std::string external_command;  // solve through external_solve when set
};

inline SdpSolution run_solver(const SdpProblem& prob, const FeasibilityOptions& opt) {
  return opt.external_command.empty() ? solve(prob, opt.solver) : external_solve(prob, opt.external_command);
}

namespace detail {

inline double kept_min_eig(const LmiModel& model, const Presolved& P, int b, const Eigen::VectorXd& y) {
  const auto& K = P.kept_rows[b];
  if (K.empty()) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd M = model.block_value(b, y);
  Eigen::MatrixXcd R(K.size(), K.size());
  for (std::size_t i = 0; i < K.size(); ++i)
    for (std::size_t j = 0; j < K.size(); ++j) R(i, j) = M(K[i], K[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double full_min_eig(const LmiModel& model, int b, const Eigen::VectorXd& y) {
  if (model.blocks()[b].dim == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(model.block_value(b, y), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace detail

// Margin maximization: feasible if the recomputed margin >= feas_margin,
// infeasible if presolve proves it or the certified dual bound <= -feas_margin.
inline FeasibilityResult decide_feasibility(const LmiModel& model, const FeasibilityOptions& opt = {}) {
  FeasibilityResult res;
  res.presolve = presolve(model, opt.presolve);
  const Presolved& P = res.presolve;
  if (P.infeasible) {
    res.verdict = Feasibility::infeasible;
    res.dual_bound = -std::numeric_limits<double>::infinity();
    res.margin = -std::numeric_limits<double>::infinity();
    res.message = "presolve: " + P.reason;
    return res;
  }
  ModelSdp ms = build_sdp(model, P, nullptr, true, opt.t_cap);
  const int k = static_cast<int>(P.free_params.size());
  res.solution = run_solver(ms.problem, opt);
  const SdpSolution& s = res.solution;
  Eigen::VectorXd z = s.y.size() ? Eigen::VectorXd(s.y.head(k)) : Eigen::VectorXd::Zero(k);
  res.y = P.lift(z);
  // Clip to the box so that reported points respect it.
  for (int i = 0; i < model.num_params(); ++i) res.y(i) = std::clamp(res.y(i), model.lower(i), model.upper(i));
  res.equality_residual = model.equality_residual(res.y);
  res.margin = std::numeric_limits<double>::infinity();
  for (int b = 0; b < static_cast<int>(model.blocks().size()); ++b) {
    res.margin = std::min(res.margin, detail::kept_min_eig(model, P, b, res.y));
    res.block_margins.push_back(detail::full_min_eig(model, b, res.y));
  }
  if (!std::isfinite(res.margin)) res.margin = opt.t_cap;
  // Certified upper bound on t from the dual iterate.
  if (s.dual_matrix.size() && s.dual_residual.size()) {
    double bound = s.dual_objective;
    for (int c = 0; c < k; ++c) {
      const int i = P.free_params[c];
      bound += std::abs(s.dual_residual(c)) * std::max(std::abs(model.lower(i)), std::abs(model.upper(i)));
    }
    const double rt = s.dual_residual(ms.margin_var);
    res.dual_bound = (1.0 + rt) > 1e-3 ? bound / (1.0 + rt) : std::numeric_limits<double>::infinity();
  } else {
    res.dual_bound = std::numeric_limits<double>::infinity();
  }
  if (res.margin >= opt.feas_margin && res.equality_residual <= 1e-8 * (1.0 + res.y.cwiseAbs().maxCoeff())) {
    res.verdict = Feasibility::feasible;
    res.message = "interior point found";
  } else if (res.dual_bound <= -opt.feas_margin) {
    res.verdict = Feasibility::infeasible;
    res.message = "dual bound certifies negative margin";
  } else if (s.status == Status::indeterminate && s.message.find("breakdown") != std::string::npos &&
             !(res.margin >= -opt.feas_margin)) {
    res.verdict = Feasibility::indeterminate;
    res.message = "solver: " + s.message;
  } else {
    res.verdict = Feasibility::marginal;
    res.message = "margin within tolerance of zero";
    if (s.status == Status::indeterminate) res.message += " (solver: " + s.message + ")";
  }
  return res;
}

struct OptimizationResult {
  Status status = Status::indeterminate;
  Eigen::VectorXd y;
  double objective = 0.0;      // objective_y . y
  double min_kept_eig = 0.0;   // feasibility of y on kept rows
  bool presolve_infeasible = false;
  Presolved presolve;
  SdpSolution solution;
  std::string message;
};

// maximize objective_y . y over the model.
inline OptimizationResult optimize(const LmiModel& model, const Eigen::VectorXd& objective_y,
                                   const FeasibilityOptions& opt = {}) {
  OptimizationResult res;
  res.presolve = presolve(model, opt.presolve);
  const Presolved& P = res.presolve;
  if (P.infeasible) {
    res.presolve_infeasible = true;
    res.status = Status::infeasible_certified;
    res.message = "presolve: " + P.reason;
    return res;
  }
  ModelSdp ms = build_sdp(model, P, &objective_y, false);
  res.solution = run_solver(ms.problem, opt);
  res.status = res.solution.status;
  res.message = res.solution.message;
  const int k = static_cast<int>(P.free_params.size());
  Eigen::VectorXd z = res.solution.y.size() ? Eigen::VectorXd(res.solution.y.head(k)) : Eigen::VectorXd::Zero(k);
  res.y = P.lift(z);
  res.objective = objective_y.dot(res.y);
  res.min_kept_eig = std::numeric_limits<double>::infinity();
  for (int b = 0; b < static_cast<int>(model.blocks().size()); ++b)
    res.min_kept_eig = std::min(res.min_kept_eig, detail::kept_min_eig(model, P, b, res.y));
  return res;
}

}  // namespace gammahull::sdp
