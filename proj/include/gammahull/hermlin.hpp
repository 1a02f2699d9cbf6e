#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gammahull/freealg.hpp"

namespace gammahull {

class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  // Symmetrizes; throws if the input is not Hermitian within 1e-10 * scale.
  explicit HermitianMatrix(const CMatrix& M, double rel_tol = 1e-10) {
    if (M.rows() != M.cols()) throw std::invalid_argument("HermitianMatrix: not square");
    if (!M.allFinite()) throw std::invalid_argument("HermitianMatrix: non-finite entries");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (M.size() && (M - M.adjoint()).cwiseAbs().maxCoeff() > rel_tol * scale)
      throw std::invalid_argument("HermitianMatrix: input is not Hermitian");
    m_ = 0.5 * (M + M.adjoint());
  }
  static HermitianMatrix identity(int n) { return HermitianMatrix(CMatrix::Identity(n, n)); }
  static HermitianMatrix zero(int n) { return HermitianMatrix(CMatrix::Zero(n, n)); }

  int n() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  operator const CMatrix&() const { return m_; }

 private:
  CMatrix m_;
};

// Tuple of Hermitian matrices of common size.
class HermTuple {
 public:
  HermTuple() = default;
  explicit HermTuple(std::vector<CMatrix> blocks, double rel_tol = 1e-10) {
    if (blocks.empty()) throw std::invalid_argument("HermTuple: empty");
    for (auto& b : blocks) blocks_.push_back(HermitianMatrix(b, rel_tol).matrix());
    detail::check_tuple(blocks_);
  }
  static HermTuple scalars(const std::vector<double>& v) {
    std::vector<CMatrix> b;
    for (double x : v) b.push_back(CMatrix::Constant(1, 1, x));
    return HermTuple(std::move(b));
  }

  int g() const { return static_cast<int>(blocks_.size()); }
  int n() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_.front().rows()); }
  const CMatrix& operator[](int j) const { return blocks_[j]; }
  const std::vector<CMatrix>& blocks() const { return blocks_; }
  operator const std::vector<CMatrix>&() const { return blocks_; }
  bool is_real() const {
    for (const auto& b : blocks_)
      if (b.imag().cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
  }

 private:
  std::vector<CMatrix> blocks_;
};

// Eigenvalues of a Hermitian matrix (lower triangle is read), ascending.
inline Eigen::VectorXd eigenvalues(const CMatrix& M) {
  if (!M.allFinite()) throw std::invalid_argument("eigenvalues: non-finite entries");
  if (M.rows() == 0) return Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: solver failed");
  return es.eigenvalues();
}
inline Eigen::VectorXd eigenvalues(const RMatrix& M) {
  if (!M.allFinite()) throw std::invalid_argument("eigenvalues: non-finite entries");
  if (M.rows() == 0) return Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: solver failed");
  return es.eigenvalues();
}

inline double min_eigenvalue(const CMatrix& M) {
  auto ev = eigenvalues(M);
  return ev.size() ? ev(0) : 0.0;
}
inline double min_eigenvalue(const RMatrix& M) {
  auto ev = eigenvalues(M);
  return ev.size() ? ev(0) : 0.0;
}
inline double min_eigenvalue(const HermitianMatrix& M) { return min_eigenvalue(M.matrix()); }

inline double default_psd_tol(const CMatrix& M) {
  return 1e-9 * std::max(1.0, M.size() ? M.cwiseAbs().maxCoeff() : 0.0);
}
inline bool is_psd(const CMatrix& M, double tol) { return min_eigenvalue(M) >= -tol; }
inline bool is_psd(const CMatrix& M) { return is_psd(M, default_psd_tol(M)); }

// Quick sufficient check: Cholesky of M + tol*I succeeds.
inline bool cholesky_precheck(const CMatrix& M, double tol) {
  Eigen::LLT<CMatrix> llt(M + tol * CMatrix::Identity(M.rows(), M.cols()));
  return llt.info() == Eigen::Success;
}

inline int numerical_rank(const CMatrix& M, double rel_tol = 1e-8) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("numerical_rank: rel_tol must be in (0,1)");
  if (M.size() == 0) return 0;
  Eigen::VectorXd s = eigenvalues(M).cwiseAbs();
  const double top = s.maxCoeff();
  if (top == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * top) ++r;
  return r;
}
inline int numerical_rank(const HermitianMatrix& M, double rel_tol = 1e-8) {
  return numerical_rank(M.matrix(), rel_tol);
}

// Operator norm of the row (X_1 ... X_g), i.e. sqrt of lambda_max(sum X_j^2).
inline double tuple_norm(const std::vector<CMatrix>& X) {
  const int n = detail::check_tuple(X);
  CMatrix S = CMatrix::Zero(n, n);
  for (const auto& x : X) S += x * x.adjoint();
  return std::sqrt(std::max(0.0, eigenvalues(S).maxCoeff()));
}
inline double tuple_norm(const HermTuple& X) { return tuple_norm(X.blocks()); }

// [[Re M, -Im M], [Im M, Re M]].
inline RMatrix realify(const CMatrix& M) {
  const auto n = M.rows();
  RMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = M.real();
  out.topRightCorner(n, n) = -M.imag();
  out.bottomLeftCorner(n, n) = M.imag();
  out.bottomRightCorner(n, n) = M.real();
  return out;
}
inline RMatrix realify(const HermitianMatrix& M) { return realify(M.matrix()); }

inline bool is_isometry(const CMatrix& V, double tol) {
  if (V.cols() > V.rows()) throw std::invalid_argument("is_isometry: more columns than rows");
  const auto m = V.cols();
  return (V.adjoint() * V - CMatrix::Identity(m, m)).norm() <= tol;
}

// Hermitian part clipped to the PSD cone.
inline CMatrix psd_projection(const CMatrix& M) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (M + M.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace gammahull
