#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gammahull/certify.hpp"
#include "gammahull/freealg.hpp"
#include "gammahull/moments.hpp"

namespace gammahull::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* problem_version = "gammahull-problem/1";
inline constexpr const char* certificate_version = "gammahull-certificate/1";
inline constexpr const char* moments_version = "gammahull-moments/1";

// Carries the field path ("p.terms[2].coef") of the offending entry.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(where), message_(what) {}
  const std::string& where() const { return where_; }
  const std::string& message() const { return message_; }

 private:
  std::string where_;
  std::string message_;
};

namespace detail {

inline std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
inline std::string at_index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(join(where, key), "missing field");
  return *it;
}

inline int as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where, "expected an integer");
  return j.get<int>();
}

inline double as_double(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where, "expected a number");
  return j.get<double>();
}

}  // namespace detail

// Complex numbers are [re, im]; a bare number is accepted as real.
inline Json to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(where, "expected a number or [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

// Matrices are row-major lists of rows.
inline Json to_json(const CMatrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(to_json(M(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where, "expected a non-empty list of rows");
  const auto r = j.size();
  if (!j[0].is_array() || j[0].empty()) throw ParseError(detail::at_index(where, 0), "expected a non-empty row");
  const auto c = j[0].size();
  CMatrix M(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const std::string wi = detail::at_index(where, i);
    if (!j[i].is_array() || j[i].size() != c) throw ParseError(wi, "rows have different lengths");
    for (std::size_t k = 0; k < c; ++k) M(i, k) = complex_from_json(j[i][k], detail::at_index(wi, k));
  }
  return M;
}

inline Json to_json(const std::vector<CMatrix>& X) {
  Json out = Json::array();
  for (const auto& x : X) out.push_back(to_json(x));
  return out;
}

inline std::vector<CMatrix> tuple_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where, "expected a non-empty list of matrices");
  std::vector<CMatrix> X;
  for (std::size_t i = 0; i < j.size(); ++i) X.push_back(matrix_from_json(j[i], detail::at_index(where, i)));
  try {
    gammahull::detail::check_tuple(X);
  } catch (const std::exception& e) {
    throw ParseError(where, e.what());
  }
  for (std::size_t i = 0; i < X.size(); ++i)
    if ((X[i] - X[i].adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, X[i].cwiseAbs().maxCoeff()))
      throw ParseError(detail::at_index(where, i), "matrix is not Hermitian");
  return X;
}

// Words are 1-based letter lists.
inline Json to_json(const Word& w) {
  Json out = Json::array();
  for (int l : w.letters()) out.push_back(l + 1);
  return out;
}

inline Word word_from_json(const Json& j, int g, const std::string& where) {
  if (!j.is_array()) throw ParseError(where, "expected a list of letters");
  std::vector<int> letters;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const int l = detail::as_int(j[i], detail::at_index(where, i));
    if (l < 1 || l > g) throw ParseError(detail::at_index(where, i), "letter out of range 1.." + std::to_string(g));
    letters.push_back(l - 1);
  }
  return Word(letters);
}

// {"rows", "cols", "terms": [{"word", "coef"}]}; scalar coefficients may be bare.
inline Json to_json(const MatrixPolynomial& p) {
  Json out;
  out["rows"] = p.rows();
  out["cols"] = p.cols();
  Json terms = Json::array();
  for (const auto& [w, c] : p.terms()) {
    Json t;
    t["word"] = to_json(w);
    t["coef"] = (p.rows() == 1 && p.cols() == 1) ? to_json(c(0, 0)) : to_json(c);
    terms.push_back(std::move(t));
  }
  out["terms"] = std::move(terms);
  return out;
}

inline MatrixPolynomial polynomial_from_json(const Json& j, int g, const std::string& where) {
  int rows = 1, cols = 1;
  const Json* terms = &j;
  if (j.is_object()) {
    if (j.contains("mu")) rows = cols = detail::as_int(j["mu"], detail::join(where, "mu"));
    if (j.contains("rows")) rows = detail::as_int(j["rows"], detail::join(where, "rows"));
    if (j.contains("cols")) cols = detail::as_int(j["cols"], detail::join(where, "cols"));
    if (rows < 1 || cols < 1) throw ParseError(where, "block sizes must be positive");
    terms = &detail::field(j, "terms", where);
  }
  const std::string tw = j.is_object() ? detail::join(where, "terms") : where;
  if (!terms->is_array()) throw ParseError(tw, "expected a list of terms");
  MatrixPolynomial::Terms out;
  for (std::size_t i = 0; i < terms->size(); ++i) {
    const std::string wi = detail::at_index(tw, i);
    const Json& t = (*terms)[i];
    Word w = word_from_json(detail::field(t, "word", wi), g, detail::join(wi, "word"));
    const Json& c = detail::field(t, "coef", wi);
    CMatrix C;
    if (c.is_array() && !c.empty() && c[0].is_array()) C = matrix_from_json(c, detail::join(wi, "coef"));
    else C = CMatrix::Constant(1, 1, complex_from_json(c, detail::join(wi, "coef")));
    if (C.rows() != rows || C.cols() != cols)
      throw ParseError(detail::join(wi, "coef"), "coefficient is " + std::to_string(C.rows()) + "x" +
                                                     std::to_string(C.cols()) + ", expected " + std::to_string(rows) +
                                                     "x" + std::to_string(cols));
    auto it = out.find(w);
    if (it == out.end()) out.emplace(w, C);
    else it->second += C;
  }
  return MatrixPolynomial(g, rows, cols, out);
}

struct ProblemFile {
  std::string version = problem_version;
  std::string name;
  int g = 1;
  GammaShape gamma;
  MatrixPolynomial p;
  std::map<std::string, std::vector<CMatrix>> anchors;
  std::optional<double> archimedean_k;
  std::optional<GammaPencil> pencil;  // optional LMI description in the file's Gamma
};

inline Json to_json(const ProblemFile& f) {
  Json out;
  out["version"] = f.version;
  if (!f.name.empty()) out["name"] = f.name;
  out["variables"] = f.g;
  Json gamma = Json::array();
  for (const auto& gm : f.gamma.gammas()) gamma.push_back(to_json(gm)["terms"]);
  out["gamma"] = std::move(gamma);
  Json p = to_json(f.p);
  Json pj;
  pj["mu"] = f.p.mu();
  pj["terms"] = p["terms"];
  out["p"] = std::move(pj);
  if (!f.anchors.empty()) {
    Json a;
    for (const auto& [name, X] : f.anchors) a[name] = to_json(X);
    out["anchors"] = std::move(a);
  }
  if (f.archimedean_k) out["archimedean_k"] = *f.archimedean_k;
  if (f.pencil) {
    Json coeffs = Json::array();
    for (const auto& A : f.pencil->coeffs()) coeffs.push_back(to_json(A));
    out["pencil"] = std::move(coeffs);
  }
  return out;
}

inline ProblemFile problem_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("", "problem file must be a JSON object");
  ProblemFile f;
  const Json& v = detail::field(j, "version", "");
  if (!v.is_string() || v.get<std::string>() != problem_version)
    throw ParseError("version", std::string("expected \"") + problem_version + "\"");
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ParseError("name", "expected a string");
    f.name = j["name"].get<std::string>();
  }
  f.g = detail::as_int(detail::field(j, "variables", ""), "variables");
  if (f.g < 1) throw ParseError("variables", "must be positive");
  const Json& gl = detail::field(j, "gamma", "");
  if (!gl.is_array()) throw ParseError("gamma", "expected a list of polynomials");
  std::vector<MatrixPolynomial> gammas;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    auto gm = polynomial_from_json(gl[i], f.g, detail::at_index("gamma", i));
    if (gm.rows() != 1 || gm.cols() != 1) throw ParseError(detail::at_index("gamma", i), "must be scalar");
    gammas.push_back(std::move(gm));
  }
  if (static_cast<int>(gammas.size()) < f.g) throw ParseError("gamma", "needs at least g entries");
  for (int i = 0; i < f.g; ++i)
    if (!(gammas[i] == MatrixPolynomial::variable(f.g, i)))
      throw ParseError(detail::at_index("gamma", i), "entry " + std::to_string(i + 1) + " must be x" + std::to_string(i + 1));
  try {
    f.gamma = GammaShape::from_list(f.g, gammas);
  } catch (const std::exception& e) {
    throw ParseError("gamma", e.what());
  }
  const Json& pj = detail::field(j, "p", "");
  f.p = polynomial_from_json(pj, f.g, "p");
  if (f.p.rows() != f.p.cols()) throw ParseError("p", "coefficients must be square");
  if (!f.p.is_symmetric()) throw ParseError("p", "polynomial is not symmetric");
  if (j.contains("anchors")) {
    const Json& a = j["anchors"];
    if (!a.is_object()) throw ParseError("anchors", "expected an object of named tuples");
    for (auto it = a.begin(); it != a.end(); ++it) {
      auto X = tuple_from_json(it.value(), "anchors." + it.key());
      if (static_cast<int>(X.size()) != f.g) throw ParseError("anchors." + it.key(), "tuple length differs from g");
      f.anchors[it.key()] = std::move(X);
    }
  }
  if (j.contains("archimedean_k")) {
    f.archimedean_k = detail::as_double(j["archimedean_k"], "archimedean_k");
    if (!(*f.archimedean_k > 0)) throw ParseError("archimedean_k", "must be positive");
  }
  if (j.contains("pencil")) {
    const Json& pl = j["pencil"];
    if (!pl.is_array()) throw ParseError("pencil", "expected a list of coefficient matrices");
    std::vector<CMatrix> coeffs;
    for (std::size_t i = 0; i < pl.size(); ++i) coeffs.push_back(matrix_from_json(pl[i], detail::at_index("pencil", i)));
    try {
      f.pencil = GammaPencil(f.gamma, coeffs);
    } catch (const std::exception& e) {
      throw ParseError("pencil", e.what());
    }
  }
  return f;
}

inline Json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError(path, "cannot open file");
  try {
    return Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ParseError(path, e.what());
  }
}

inline void write_json(const Json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

inline ProblemFile parse_problem(const std::string& path) {
  const Json j = read_json(path);
  try {
    return problem_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(e.where().empty() ? path : path + ": " + e.where(), e.message());
  }
}

// "(a,b,...)" for 1x1 anchors.
inline std::vector<CMatrix> parse_scalar_point(const std::string& s) {
  std::string t;
  for (char c : s)
    if (c != ' ') t += c;
  if (t.size() < 3 || t.front() != '(' || t.back() != ')') throw ParseError("point", "expected \"(a,b,...)\"");
  std::vector<CMatrix> X;
  const std::string body = t.substr(1, t.size() - 2);
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = body.find(',', start);
    const std::string item = body.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw ParseError("point", "bad number \"" + item + "\"");
    X.push_back(CMatrix::Constant(1, 1, v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return X;
}

// Certificates.

inline Json to_json(const QmCertificate& c) {
  Json out;
  out["target"] = to_json(c.target);
  Json p = to_json(c.p);
  out["p"] = std::move(p);
  out["alpha"] = c.alpha;
  out["beta"] = c.beta;
  Json sb = Json::array(), wb = Json::array();
  for (const auto& w : c.sos_basis) sb.push_back(to_json(w));
  for (const auto& w : c.weighted_basis) wb.push_back(to_json(w));
  out["sos_basis"] = std::move(sb);
  out["weighted_basis"] = std::move(wb);
  out["gram_sos"] = c.gram_sos.size() ? to_json(c.gram_sos) : Json::array();
  out["gram_weighted"] = c.gram_weighted.size() ? to_json(c.gram_weighted) : Json::array();
  out["recomposition_residual"] = c.recomposition_residual;
  return out;
}

inline QmCertificate qm_from_json(const Json& j, int g, const std::string& where) {
  QmCertificate c;
  c.target = polynomial_from_json(detail::field(j, "target", where), g, detail::join(where, "target"));
  c.p = polynomial_from_json(detail::field(j, "p", where), g, detail::join(where, "p"));
  c.alpha = detail::as_int(detail::field(j, "alpha", where), detail::join(where, "alpha"));
  c.beta = detail::as_int(detail::field(j, "beta", where), detail::join(where, "beta"));
  auto basis = [&](const char* key) {
    const Json& b = detail::field(j, key, where);
    const std::string wb = detail::join(where, key);
    if (!b.is_array()) throw ParseError(wb, "expected a list of words");
    std::vector<Word> out;
    for (std::size_t i = 0; i < b.size(); ++i) out.push_back(word_from_json(b[i], g, detail::at_index(wb, i)));
    return out;
  };
  c.sos_basis = basis("sos_basis");
  c.weighted_basis = basis("weighted_basis");
  auto gram = [&](const char* key) {
    const Json& m = detail::field(j, key, where);
    return m.empty() ? CMatrix(0, 0) : matrix_from_json(m, detail::join(where, key));
  };
  c.gram_sos = gram("gram_sos");
  c.gram_weighted = gram("gram_weighted");
  if (j.contains("recomposition_residual"))
    c.recomposition_residual = detail::as_double(j["recomposition_residual"], detail::join(where, "recomposition_residual"));
  return c;
}

struct CertificateFile {
  std::string kind;  // "separation" or "qm"
  int g = 1;
  std::optional<SeparationCertificate> separation;
  std::optional<QmCertificate> qm;
  std::optional<std::vector<CMatrix>> point;
};

inline Json to_json(const SeparationCertificate& c, const std::optional<std::vector<CMatrix>>& point = std::nullopt) {
  Json out;
  out["version"] = certificate_version;
  out["kind"] = "separation";
  out["variables"] = c.pencil.gamma().g();
  Json gamma = Json::array();
  for (const auto& gm : c.pencil.gamma().gammas()) gamma.push_back(to_json(gm)["terms"]);
  out["gamma"] = std::move(gamma);
  out["monic"] = c.monic;
  Json coeffs = Json::array();
  for (const auto& A : c.pencil.coeffs()) coeffs.push_back(to_json(A));
  out["pencil"] = std::move(coeffs);
  out["violation"] = c.violation;
  if (point) out["point"] = to_json(*point);
  out["qm"] = to_json(c.qm);
  return out;
}

inline Json to_json(const QmCertificate& c, int g) {
  Json out;
  out["version"] = certificate_version;
  out["kind"] = "qm";
  out["variables"] = g;
  out["qm"] = to_json(c);
  return out;
}

inline CertificateFile certificate_from_json(const Json& j) {
  CertificateFile f;
  const Json& v = detail::field(j, "version", "");
  if (!v.is_string() || v.get<std::string>() != certificate_version)
    throw ParseError("version", std::string("expected \"") + certificate_version + "\"");
  const Json& k = detail::field(j, "kind", "");
  if (!k.is_string()) throw ParseError("kind", "expected a string");
  f.kind = k.get<std::string>();
  f.g = detail::as_int(detail::field(j, "variables", ""), "variables");
  if (f.g < 1) throw ParseError("variables", "must be positive");
  if (j.contains("point")) f.point = tuple_from_json(j["point"], "point");
  if (f.kind == "qm") {
    f.qm = qm_from_json(detail::field(j, "qm", ""), f.g, "qm");
    return f;
  }
  if (f.kind != "separation") throw ParseError("kind", "expected \"separation\" or \"qm\"");
  const Json& gl = detail::field(j, "gamma", "");
  if (!gl.is_array()) throw ParseError("gamma", "expected a list of polynomials");
  std::vector<MatrixPolynomial> gammas;
  for (std::size_t i = 0; i < gl.size(); ++i) gammas.push_back(polynomial_from_json(gl[i], f.g, detail::at_index("gamma", i)));
  SeparationCertificate c;
  GammaShape G;
  try {
    G = GammaShape::from_list(f.g, gammas);
  } catch (const std::exception& e) {
    throw ParseError("gamma", e.what());
  }
  const Json& pl = detail::field(j, "pencil", "");
  if (!pl.is_array()) throw ParseError("pencil", "expected a list of coefficient matrices");
  std::vector<CMatrix> coeffs;
  for (std::size_t i = 0; i < pl.size(); ++i) coeffs.push_back(matrix_from_json(pl[i], detail::at_index("pencil", i)));
  try {
    c.pencil = GammaPencil(G, coeffs);
  } catch (const std::exception& e) {
    throw ParseError("pencil", e.what());
  }
  if (j.contains("monic")) {
    if (!j["monic"].is_boolean()) throw ParseError("monic", "expected a boolean");
    c.monic = j["monic"].get<bool>();
  }
  if (j.contains("violation")) c.violation = detail::as_double(j["violation"], "violation");
  c.qm = qm_from_json(detail::field(j, "qm", ""), f.g, "qm");
  f.separation = std::move(c);
  return f;
}

inline CertificateFile parse_certificate(const std::string& path) {
  const Json j = read_json(path);
  try {
    return certificate_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(e.where().empty() ? path : path + ": " + e.where(), e.message());
  }
}

// Moment sequences with exact entries: values are rational strings ("-2/39")
// or numbers, complex entries as [re, im] are rejected in exact files.
struct MomentFile {
  int g = 1;
  int n = 1;
  int degree = 0;
  std::string name;
  exact::RationalMoments moments{1, 0, 1};
  std::vector<Word> listed;
};

inline exact::Rational rational_from_json(const Json& j, const std::string& where) {
  try {
    if (j.is_string()) return exact::parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return exact::Rational(j.get<long long>());
    if (j.is_number()) return exact::to_rational(j.get<double>());
  } catch (const std::exception& e) {
    throw ParseError(where, e.what());
  }
  throw ParseError(where, "expected a rational string or a number");
}

inline MomentFile moments_from_json(const Json& j) {
  MomentFile f;
  const Json& v = detail::field(j, "version", "");
  if (!v.is_string() || v.get<std::string>() != moments_version)
    throw ParseError("version", std::string("expected \"") + moments_version + "\"");
  if (j.contains("name") && j["name"].is_string()) f.name = j["name"].get<std::string>();
  f.g = detail::as_int(detail::field(j, "variables", ""), "variables");
  f.n = detail::as_int(detail::field(j, "n", ""), "n");
  f.degree = detail::as_int(detail::field(j, "degree", ""), "degree");
  if (f.g < 1 || f.n < 1 || f.degree < 0) throw ParseError("", "variables, n must be positive and degree nonnegative");
  f.moments = exact::RationalMoments(f.g, f.degree, f.n);
  const Json& list = detail::field(j, "moments", "");
  if (!list.is_array()) throw ParseError("moments", "expected a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string wi = detail::at_index("moments", i);
    Word w = word_from_json(detail::field(list[i], "word", wi), f.g, detail::join(wi, "word"));
    if (w.size() > f.degree) throw ParseError(detail::join(wi, "word"), "longer than the declared degree");
    const Json& val = detail::field(list[i], "value", wi);
    const std::string vw = detail::join(wi, "value");
    if (!val.is_array() || static_cast<int>(val.size()) != f.n) throw ParseError(vw, "expected n rows");
    exact::RationalMatrix M(f.n, f.n);
    for (int r = 0; r < f.n; ++r) {
      const std::string rw = detail::at_index(vw, r);
      if (!val[r].is_array() || static_cast<int>(val[r].size()) != f.n) throw ParseError(rw, "expected n entries");
      for (int c = 0; c < f.n; ++c) M(r, c) = rational_from_json(val[r][c], detail::at_index(rw, c));
    }
    f.moments.set(w, M);
    f.listed.push_back(w);
  }
  return f;
}

inline MomentFile parse_moments(const std::string& path) {
  const Json j = read_json(path);
  try {
    return moments_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(e.where().empty() ? path : path + ": " + e.where(), e.message());
  }
}

}  // namespace gammahull::io
