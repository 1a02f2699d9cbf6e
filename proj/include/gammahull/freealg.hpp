#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gammahull {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

// A word in the free monoid on g letters. Letters are stored 0-based;
// file formats use 1-based indices.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}
  Word(std::initializer_list<int> letters) : letters_(letters) {}

  static Word letter(int i) { return Word(std::vector<int>{i}); }

  const std::vector<int>& letters() const { return letters_; }
  int size() const { return static_cast<int>(letters_.size()); }
  bool empty() const { return letters_.empty(); }
  int operator[](int k) const { return letters_[k]; }

  Word adjoint() const {
    return Word(std::vector<int>(letters_.rbegin(), letters_.rend()));
  }
  bool is_palindrome() const {
    return std::equal(letters_.begin(), letters_.begin() + size() / 2,
                      letters_.rbegin());
  }
  int max_letter() const {
    return letters_.empty() ? -1
                            : *std::max_element(letters_.begin(), letters_.end());
  }

  friend Word operator*(const Word& a, const Word& b) {
    std::vector<int> out(a.letters_);
    out.insert(out.end(), b.letters_.begin(), b.letters_.end());
    return Word(std::move(out));
  }
  // Graded lexicographic order: by length, then letter by letter.
  friend bool operator<(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.letters_ < b.letters_;
  }
  friend bool operator==(const Word& a, const Word& b) {
    return a.letters_ == b.letters_;
  }
  friend bool operator!=(const Word& a, const Word& b) { return !(a == b); }

  // Human-readable form with 1-based letters, e.g. "122"; "e" for the empty word.
  std::string str() const {
    if (letters_.empty()) return "e";
    std::string s;
    for (std::size_t k = 0; k < letters_.size(); ++k) {
      if (k && letters_[k] >= 9) s += '.';
      s += std::to_string(letters_[k] + 1);
    }
    return s;
  }

 private:
  std::vector<int> letters_;
};

// The smaller of w and w* in graded-lex order.
inline Word canonical(const Word& w) {
  Word a = w.adjoint();
  return a < w ? a : w;
}

// All words of length <= d over g letters, graded-lex, empty word first.
inline std::vector<Word> enumerate_words(int g, int d) {
  if (g < 1 || d < 0) throw std::invalid_argument("enumerate_words: need g >= 1, d >= 0");
  std::vector<Word> out{Word()};
  std::vector<Word> layer{Word()};
  for (int len = 1; len <= d; ++len) {
    std::vector<Word> next;
    next.reserve(layer.size() * g);
    for (const Word& w : layer) {
      for (int i = 0; i < g; ++i) next.push_back(w * Word::letter(i));
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

// Matrix-coefficient free polynomial sum_w p_w w over g symmetric variables.
// Coefficients are rows x cols; mu() is defined for square coefficients.
class MatrixPolynomial {
 public:
  using Terms = std::map<Word, CMatrix>;

  MatrixPolynomial() : MatrixPolynomial(1, 1) {}
  MatrixPolynomial(int g, int mu) : MatrixPolynomial(g, mu, mu) {}
  MatrixPolynomial(int g, int rows, int cols) : g_(g), rows_(rows), cols_(cols) {
    if (g < 1 || rows < 1 || cols < 1)
      throw std::invalid_argument("MatrixPolynomial: g and block sizes must be positive");
  }
  MatrixPolynomial(int g, int rows, int cols, Terms terms)
      : MatrixPolynomial(g, rows, cols) {
    for (auto& [w, c] : terms) add_into(w, c);
  }
  MatrixPolynomial(int g, int mu, Terms terms)
      : MatrixPolynomial(g, mu, mu, std::move(terms)) {}

  static MatrixPolynomial constant(int g, const CMatrix& c) {
    return MatrixPolynomial(g, c.rows(), c.cols(), {{Word(), c}});
  }
  static MatrixPolynomial scalar(int g, Complex c) {
    return constant(g, CMatrix::Constant(1, 1, c));
  }
  static MatrixPolynomial variable(int g, int i) {
    if (i < 0 || i >= g) throw std::out_of_range("MatrixPolynomial::variable");
    return MatrixPolynomial(g, 1, {{Word::letter(i), CMatrix::Ones(1, 1)}});
  }
  static MatrixPolynomial monomial(int g, const Word& w, Complex c = 1.0) {
    return MatrixPolynomial(g, 1, {{w, CMatrix::Constant(1, 1, c)}});
  }

  int g() const { return g_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int mu() const {
    if (rows_ != cols_) throw std::logic_error("MatrixPolynomial: non-square coefficients");
    return rows_;
  }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  CMatrix coefficient(const Word& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? CMatrix::Zero(rows_, cols_) : it->second;
  }
  int degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.size(); }

  MatrixPolynomial adjoint() const {
    MatrixPolynomial out(g_, cols_, rows_);
    for (const auto& [w, c] : terms_) out.terms_.emplace(w.adjoint(), c.adjoint());
    return out;
  }

  // Exact comparison of stored coefficients.
  bool is_symmetric() const {
    if (rows_ != cols_) return false;
    for (const auto& [w, c] : terms_) {
      auto it = terms_.find(w.adjoint());
      if (it == terms_.end() || it->second != c.adjoint()) return false;
    }
    return true;
  }

  friend MatrixPolynomial operator+(const MatrixPolynomial& a, const MatrixPolynomial& b) {
    a.check_same_shape(b);
    MatrixPolynomial out = a;
    for (const auto& [w, c] : b.terms_) out.add_into(w, c);
    return out;
  }
  friend MatrixPolynomial operator-(const MatrixPolynomial& a) {
    MatrixPolynomial out = a;
    for (auto& [w, c] : out.terms_) c = -c;
    return out;
  }
  friend MatrixPolynomial operator-(const MatrixPolynomial& a, const MatrixPolynomial& b) {
    return a + (-b);
  }
  friend MatrixPolynomial operator*(Complex s, const MatrixPolynomial& a) {
    MatrixPolynomial out(a.g_, a.rows_, a.cols_);
    for (const auto& [w, c] : a.terms_) out.add_into(w, s * c);
    return out;
  }
  // Product with coefficient p_a q_b at word ab. A 1x1 factor acts as a scalar.
  friend MatrixPolynomial operator*(const MatrixPolynomial& a, const MatrixPolynomial& b) {
    if (a.g_ != b.g_) throw std::invalid_argument("MatrixPolynomial: variable count mismatch");
    const bool a_scalar = a.rows_ == 1 && a.cols_ == 1;
    const bool b_scalar = b.rows_ == 1 && b.cols_ == 1;
    int r, c;
    if (a_scalar) { r = b.rows_; c = b.cols_; }
    else if (b_scalar) { r = a.rows_; c = a.cols_; }
    else if (a.cols_ == b.rows_) { r = a.rows_; c = b.cols_; }
    else throw std::invalid_argument("MatrixPolynomial: block size mismatch in product");
    MatrixPolynomial out(a.g_, r, c);
    for (const auto& [wa, ca] : a.terms_) {
      for (const auto& [wb, cb] : b.terms_) {
        CMatrix prod = a_scalar ? CMatrix(ca(0, 0) * cb)
                       : b_scalar ? CMatrix(ca * cb(0, 0))
                                  : CMatrix(ca * cb);
        out.add_into(wa * wb, prod);
      }
    }
    return out;
  }
  friend bool operator==(const MatrixPolynomial& a, const MatrixPolynomial& b) {
    return a.g_ == b.g_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.terms_ == b.terms_;
  }

 private:
  void add_into(const Word& w, const CMatrix& c) {
    if (c.rows() != rows_ || c.cols() != cols_)
      throw std::invalid_argument("MatrixPolynomial: coefficient has wrong shape for word " + w.str());
    if (w.max_letter() >= g_)
      throw std::invalid_argument("MatrixPolynomial: letter out of range in word " + w.str());
    auto it = terms_.find(w);
    if (it == terms_.end()) {
      if (!c.isZero(0.0)) terms_.emplace(w, c);
      return;
    }
    it->second += c;
    if (it->second.isZero(0.0)) terms_.erase(it);
  }
  void check_same_shape(const MatrixPolynomial& b) const {
    if (g_ != b.g_ || rows_ != b.rows_ || cols_ != b.cols_)
      throw std::invalid_argument("MatrixPolynomial: shape mismatch");
  }

  int g_ = 1;
  int rows_ = 1;
  int cols_ = 1;
  Terms terms_;
};

inline MatrixPolynomial adjoint(const MatrixPolynomial& p) { return p.adjoint(); }
inline bool is_symmetric(const MatrixPolynomial& p) { return p.is_symmetric(); }

namespace detail {

inline int check_tuple(const std::vector<CMatrix>& X) {
  if (X.empty()) throw std::invalid_argument("empty matrix tuple");
  const auto n = X.front().rows();
  for (const auto& M : X)
    if (M.rows() != n || M.cols() != n)
      throw std::invalid_argument("matrix tuple entries must be square of common size");
  return static_cast<int>(n);
}

// Word evaluation with a cache of prefixes.
class WordEvaluator {
 public:
  explicit WordEvaluator(const std::vector<CMatrix>& X) : X_(X), n_(check_tuple(X)) {}
  const CMatrix& operator()(const Word& w) {
    auto it = cache_.find(w);
    if (it != cache_.end()) return it->second;
    if (w.empty()) return cache_.emplace(w, CMatrix::Identity(n_, n_)).first->second;
    std::vector<int> prefix(w.letters().begin(), w.letters().end() - 1);
    CMatrix v = (*this)(Word(std::move(prefix))) * X_[w.letters().back()];
    return cache_.emplace(w, std::move(v)).first->second;
  }
  int n() const { return n_; }

 private:
  const std::vector<CMatrix>& X_;
  int n_;
  std::map<Word, CMatrix> cache_;
};

inline CMatrix kron(const CMatrix& A, const CMatrix& B) {
  CMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

}  // namespace detail

// Word value w(X).
inline CMatrix evaluate_word(const Word& w, const std::vector<CMatrix>& X) {
  const int n = detail::check_tuple(X);
  CMatrix out = CMatrix::Identity(n, n);
  for (int l : w.letters()) {
    if (l >= static_cast<int>(X.size())) throw std::invalid_argument("evaluate_word: letter out of range");
    out = out * X[l];
  }
  return out;
}

// p(X) = sum_w p_w (x) w(X), indexed (coefficient row, matrix row).
inline CMatrix evaluate(const MatrixPolynomial& p, const std::vector<CMatrix>& X) {
  if (static_cast<int>(X.size()) != p.g())
    throw std::invalid_argument("evaluate: tuple length differs from variable count");
  detail::WordEvaluator ev(X);
  const int n = ev.n();
  CMatrix out = CMatrix::Zero(p.rows() * n, p.cols() * n);
  for (const auto& [w, c] : p.terms()) {
    const CMatrix& wx = ev(w);
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j)
        if (c(i, j) != Complex(0.0)) out.block(i * n, j * n, n, n) += c(i, j) * wx;
  }
  return out;
}

// Block diagonal sum of square matrix polynomials.
inline MatrixPolynomial direct_sum(const std::vector<MatrixPolynomial>& ps) {
  if (ps.empty()) throw std::invalid_argument("direct_sum: empty list");
  int g = ps.front().g(), mu = 0;
  for (const auto& p : ps) {
    if (p.g() != g) throw std::invalid_argument("direct_sum: variable count mismatch");
    mu += p.mu();
  }
  MatrixPolynomial::Terms terms;
  int off = 0;
  for (const auto& p : ps) {
    for (const auto& [w, c] : p.terms()) {
      auto [it, fresh] = terms.try_emplace(w, CMatrix::Zero(mu, mu));
      it->second.block(off, off, p.mu(), p.mu()) = c;
    }
    off += p.mu();
  }
  return MatrixPolynomial(g, mu, std::move(terms));
}

// Tuple Gamma = (x_1, ..., x_g, gamma_{g+1}, ..., gamma_r) of scalar symmetric polynomials.
class GammaShape {
 public:
  GammaShape() = default;
  GammaShape(int g, std::vector<MatrixPolynomial> extra) : g_(g) {
    if (g < 1) throw std::invalid_argument("GammaShape: g must be positive");
    gammas_.clear();
    for (int i = 0; i < g; ++i) gammas_.push_back(MatrixPolynomial::variable(g, i));
    for (auto& p : extra) {
      if (p.g() != g || p.rows() != 1 || p.cols() != 1)
        throw std::invalid_argument("GammaShape: extra entries must be scalar polynomials in g variables");
      if (!p.is_symmetric()) throw std::invalid_argument("GammaShape: entries must be symmetric");
      gammas_.push_back(std::move(p));
    }
  }
  // Full list; validates that the first g entries are the coordinates.
  static GammaShape from_list(int g, const std::vector<MatrixPolynomial>& all) {
    if (static_cast<int>(all.size()) < g) throw std::invalid_argument("GammaShape: fewer entries than variables");
    for (int i = 0; i < g; ++i)
      if (!(all[i] == MatrixPolynomial::variable(g, i)))
        throw std::invalid_argument("GammaShape: entry " + std::to_string(i + 1) + " must be x" + std::to_string(i + 1));
    return GammaShape(g, std::vector<MatrixPolynomial>(all.begin() + g, all.end()));
  }
  static GammaShape coordinates(int g) { return GammaShape(g, {}); }

  int g() const { return g_; }
  int r() const { return static_cast<int>(gammas_.size()); }
  const std::vector<MatrixPolynomial>& gammas() const { return gammas_; }
  const MatrixPolynomial& operator[](int j) const { return gammas_[j]; }
  int delta() const {
    int d = 1;
    for (const auto& p : gammas_) d = std::max(d, p.degree());
    return d;
  }
  bool vanishes_at_zero() const {
    for (const auto& p : gammas_)
      if (p.terms().count(Word())) return false;
    return true;
  }

 private:
  int g_ = 1;
  std::vector<MatrixPolynomial> gammas_{MatrixPolynomial::variable(1, 0)};
};

inline std::vector<CMatrix> gamma_map(const GammaShape& G, const std::vector<CMatrix>& X) {
  if (static_cast<int>(X.size()) != G.g()) throw std::invalid_argument("gamma_map: tuple length mismatch");
  detail::check_tuple(X);
  std::vector<CMatrix> out(X.begin(), X.end());
  for (int j = G.g(); j < G.r(); ++j) out.push_back(evaluate(G[j], X));
  return out;
}

}  // namespace gammahull
