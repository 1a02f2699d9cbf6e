#include <gtest/gtest.h>

#include <cmath>

#include "gammahull/convexity.hpp"
#include "test_util.hpp"

namespace gammahull {
namespace {

using testing::random_hermitian;

CMatrix scalar(double v) { return CMatrix::Constant(1, 1, v); }
MatrixPolynomial var(int g, int i) { return MatrixPolynomial::variable(g, i); }
GammaShape y_squared() { return GammaShape(2, {var(2, 1) * var(2, 1)}); }

CMatrix diag(std::initializer_list<double> v) {
  Eigen::VectorXd d(v.size());
  int i = 0;
  for (double x : v) d(i++) = x;
  return d.cast<Complex>().asDiagonal();
}

// Free parabola pencil in (x, y, w):
// (3/2 + w - x) + (3/2 + x + w) + (1 - 2w) + (1 + 2w) + [[1, sqrt2 y], [sqrt2 y, 1 + 2w]].
std::vector<CMatrix> parabola_coeffs() {
  CMatrix A0 = CMatrix::Zero(6, 6), Ax = A0, Ay = A0, Aw = A0;
  A0.diagonal() << 1.5, 1.5, 1, 1, 1, 1;
  Ax(0, 0) = -1;
  Ax(1, 1) = 1;
  Aw.diagonal() << 1, 1, -2, 2, 0, 2;
  Ay(4, 5) = Ay(5, 4) = std::sqrt(2.0);
  return {A0, Ax, Ay, Aw};
}

TEST(GammaPairCheck, Examples) {
  std::mt19937 rng(1);
  auto G = y_squared();
  auto Z = testing::random_tuple(rng, 2, 3, 1.0);
  EXPECT_TRUE(gamma_pair_check(G, Z, testing::random_unitary(rng, 3)).ok);

  CMatrix X = random_hermitian(rng, 3), Y = CMatrix::Zero(3, 3);
  Y.topLeftCorner(2, 2) = random_hermitian(rng, 2);
  Y(2, 2) = 0.4;
  CMatrix V = CMatrix::Zero(3, 2);
  V(0, 0) = V(1, 1) = 1.0;
  EXPECT_TRUE(gamma_pair_check(G, {X, Y}, V).ok);

  CMatrix S(2, 2);
  S << 0, 1, 1, 0;
  CMatrix e1 = CMatrix::Zero(2, 1);
  e1(0, 0) = 1;
  auto r = gamma_pair_check(G, {CMatrix::Zero(2, 2), S}, e1);
  EXPECT_FALSE(r.ok);
  EXPECT_NEAR(r.deviation, 1.0, 1e-15);
  EXPECT_THROW(gamma_pair_check(G, {CMatrix::Zero(2, 2), S}, CMatrix::Ones(2, 1)), std::invalid_argument);
}

TEST(GammaConvexCombine, Examples) {
  std::mt19937 rng(2);
  auto G = y_squared();
  auto Z = testing::random_tuple(rng, 2, 3, 1.0);
  CMatrix U = testing::random_unitary(rng, 3);
  auto c = gamma_convex_combine(G, {Z}, {U});
  EXPECT_LT((c.X[0] - U.adjoint() * Z[0] * U).norm(), 1e-14);

  const double h = 1.0 / std::sqrt(2.0);
  auto half = gamma_convex_combine(G, {{scalar(1), scalar(0.9)}, {scalar(-1), scalar(0.9)}},
                                   {scalar(h), scalar(h)});
  EXPECT_NEAR(std::abs(half.X[0](0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(half.X[1](0, 0).real(), 0.9, 1e-15);
  EXPECT_TRUE(half.pair.ok);

  EXPECT_THROW(gamma_convex_combine(G, {{scalar(1), scalar(0.9)}, {scalar(-1), scalar(0.9)}}, {scalar(1), scalar(1)}),
               std::invalid_argument);
  // Averaging y = +-1 is a valid matrix convex combination but not a Gamma one.
  EXPECT_THROW(gamma_convex_combine(G, {{scalar(0), scalar(1)}, {scalar(0), scalar(-1)}}, {scalar(h), scalar(h)}),
               std::invalid_argument);
}

TEST(GammaSpectrahedron, FreeParabolaPencil) {
  GammaPencil L(GammaShape::coordinates(3), parabola_coeffs());
  auto v = gamma_spectrahedron_membership(L, {scalar(0), scalar(0), scalar(0)});
  EXPECT_TRUE(v.member);
  EXPECT_NEAR(v.margin, 1.0, 1e-14);

  // Substituting w = y^2 - 1/2 gives a Gamma-pencil for Gamma = (x, y, y^2)
  // whose scalar domain is -(1 + y^2) <= x <= 1 + y^2, |y| <= 1.
  auto A = parabola_coeffs();
  GammaPencil P(y_squared(), {A[0] - 0.5 * A[3], A[1], A[2], A[3]});
  for (double x = -2.2; x <= 2.2; x += 0.1)
    for (double y = -1.2; y <= 1.2; y += 0.1) {
      const double slack = std::min(1 + y * y - std::abs(x), 1 - y * y);
      if (std::abs(slack) < 1e-6) continue;
      EXPECT_EQ(gamma_spectrahedron_membership(P, {scalar(x), scalar(y)}, 1e-9).member, slack > 0) << x << "," << y;
    }
}

TEST(GammaSpectrahedron, MonicAtZero) {
  std::mt19937 rng(3);
  auto G = y_squared();
  std::vector<CMatrix> A{CMatrix::Identity(3, 3), random_hermitian(rng, 3), random_hermitian(rng, 3),
                         random_hermitian(rng, 3)};
  GammaPencil L(G, A);
  EXPECT_TRUE(L.monic());
  auto v = gamma_spectrahedron_membership(L, {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)});
  EXPECT_NEAR(v.margin, 1.0, 1e-14);
}

TEST(GammaSpectrahedron, TvScreenAgreesWithPolynomial) {
  // 1 - x^2 - y^4 >= 0 iff [[1, x, y^2], [x, 1, 0], [y^2, 0, 1]] >= 0 (Schur complement).
  auto G = y_squared();
  CMatrix A0 = CMatrix::Identity(3, 3), Ax = CMatrix::Zero(3, 3), Ay = Ax, Aw = Ax;
  Ax(0, 1) = Ax(1, 0) = 1;
  Aw(0, 2) = Aw(2, 0) = 1;
  GammaPencil L(G, {A0, Ax, Ay, Aw});
  auto x = var(2, 0), y = var(2, 1);
  auto p = MatrixPolynomial::scalar(2, 1.0) - x * x - y * y * y * y;
  for (double a = -1.2; a <= 1.2; a += 0.05)
    for (double b = -1.2; b <= 1.2; b += 0.05) {
      const double v = 1 - a * a - std::pow(b, 4);
      if (std::abs(v) < 1e-6) continue;
      EXPECT_EQ(gamma_spectrahedron_membership(L, {scalar(a), scalar(b)}).member, v > 0);
    }
  std::mt19937 rng(11);
  for (int t = 0; t < 50; ++t) {
    auto Z = testing::random_tuple(rng, 2, 3, 0.6 + 0.02 * t);
    const double v = min_eigenvalue(evaluate(p, Z));
    if (std::abs(v) < 1e-6) continue;
    EXPECT_EQ(gamma_spectrahedron_membership(L, Z).member, v > 0);
  }
}

TEST(Spectrahedrop, ReducesWithoutLift) {
  GammaPencil L(GammaShape::coordinates(3), parabola_coeffs());
  auto v = spectrahedrop_membership({L, {}}, {scalar(0), scalar(0), scalar(0)});
  EXPECT_EQ(v.member, Answer::yes);
  auto w = spectrahedrop_membership({L, {CMatrix::Zero(6, 6)}}, {scalar(0), scalar(0), scalar(0)});
  EXPECT_EQ(w.member, Answer::yes);
  auto far = spectrahedrop_membership({L, {CMatrix::Zero(6, 6)}}, {scalar(3), scalar(0), scalar(0)});
  EXPECT_EQ(far.member, Answer::no);
}

TEST(Spectrahedrop, ProjectsOutLiftedVariable) {
  // {x : exists w with [[1, x], [x, w]] >= 0, 1 - w >= 0} = [-1, 1].
  GammaShape G = GammaShape::coordinates(1);
  CMatrix A0 = CMatrix::Zero(3, 3), Ax = A0, B = A0;
  A0(0, 0) = 1;
  A0(2, 2) = 1;
  Ax(0, 1) = Ax(1, 0) = 1;
  B(1, 1) = 1;
  B(2, 2) = -1;
  LiftedGammaPencil L{GammaPencil(G, {A0, Ax}), {B}};
  EXPECT_EQ(spectrahedrop_membership(L, {scalar(0.5)}).member, Answer::yes);
  EXPECT_EQ(spectrahedrop_membership(L, {scalar(1.2)}).member, Answer::no);
  std::mt19937 rng(4);
  CMatrix X = random_hermitian(rng, 2);
  X /= X.norm();
  X *= 0.9;
  auto v = spectrahedrop_membership(L, {X});
  ASSERT_EQ(v.member, Answer::yes);
  EXPECT_GE(min_eigenvalue(evaluate(L, {X}, v.lifted)), 0.0);
}

TEST(Boundedness, Examples) {
  auto b = spectrahedron_bounded({diag({1, -1})});
  EXPECT_EQ(b.bounded, Answer::yes);
  EXPECT_TRUE(b.independent);
  EXPECT_EQ(spectrahedron_bounded({scalar(1)}).bounded, Answer::no);
  EXPECT_EQ(spectrahedron_bounded({diag({1, 2})}).bounded, Answer::no);
  EXPECT_EQ(spectrahedron_bounded({diag({1, -1}), diag({2, -2})}).bounded, Answer::no);
  std::mt19937 rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<CMatrix> A{random_hermitian(rng, 3), random_hermitian(rng, 3)};
    for (auto& a : A) a -= (a.trace() / 3.0) * CMatrix::Identity(3, 3);
    auto r = spectrahedron_bounded(A);
    EXPECT_EQ(r.bounded, Answer::yes);
    EXPECT_TRUE(r.independent);
  }
}

std::vector<CMatrix> random_traceless(std::mt19937& rng, int g, int d, bool real = false) {
  std::vector<CMatrix> A;
  for (int i = 0; i < g; ++i) {
    CMatrix a = real ? testing::random_real_symmetric(rng, d) : random_hermitian(rng, d);
    a -= (a.trace() / double(d)) * CMatrix::Identity(d, d);
    A.push_back(a);
  }
  return A;
}

TEST(Inclusion, Examples) {
  std::mt19937 rng(6);
  auto A = random_traceless(rng, 2, 3);
  EXPECT_EQ(inclusion(A, A).included, Answer::yes);

  std::vector<CMatrix> Vk{testing::random_complex(rng, 3, 2), testing::random_complex(rng, 3, 2)};
  CMatrix S = CMatrix::Zero(2, 2);
  for (auto& v : Vk) S += v.adjoint() * v;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(S);
  CMatrix Sm = es.operatorInverseSqrt();
  for (auto& v : Vk) v = v * Sm;
  std::vector<CMatrix> B(2, CMatrix::Zero(2, 2));
  for (int i = 0; i < 2; ++i)
    for (auto& v : Vk) B[i] += v.adjoint() * A[i] * v;
  EXPECT_EQ(inclusion(A, B).included, Answer::yes);

  auto no = inclusion({diag({1, -1})}, {diag({2, -2})});
  EXPECT_EQ(no.included, Answer::no);
  EXPECT_THROW(inclusion({scalar(1)}, {scalar(1)}), std::invalid_argument);
}

TEST(Inclusion, ReflexiveAndTransitive) {
  std::mt19937 rng(7);
  for (int t = 0; t < 5; ++t) {
    auto A = random_traceless(rng, 2, 3, t % 2);
    CMatrix V1 = testing::random_isometry(rng, 3, 2);
    std::vector<CMatrix> B, C;
    for (auto& a : A) B.push_back(V1.adjoint() * a * V1);
    CMatrix V2 = testing::random_isometry(rng, 2, 1);
    for (auto& b : B) C.push_back(V2.adjoint() * b * V2);
    EXPECT_EQ(inclusion(A, A).included, Answer::yes);
    EXPECT_EQ(inclusion(A, B).included, Answer::yes);
    EXPECT_EQ(inclusion(A, C).included, Answer::yes);
  }
}

TEST(GammaPolar, Examples) {
  std::mt19937 rng(8);
  GammaShape G1 = GammaShape::coordinates(1);
  EXPECT_EQ(gamma_polar_membership(G1, {diag({1, -1})}, {scalar(2)}).included, Answer::no);
  EXPECT_EQ(gamma_polar_membership(G1, {diag({1, -1})}, {scalar(0.5)}).included, Answer::yes);

  GammaShape G2 = GammaShape::coordinates(2);
  auto A = random_traceless(rng, 2, 3);
  EXPECT_EQ(gamma_polar_membership(G2, A, A).included, Answer::yes);
  CMatrix V = CMatrix::Zero(3, 2);
  V(0, 0) = V(1, 1) = 1;
  std::vector<CMatrix> X;
  for (auto& a : A) X.push_back(V.adjoint() * a * V);
  EXPECT_EQ(gamma_polar_membership(G2, A, X).included, Answer::yes);
}

TEST(GammaPolar, ZeroIsAlwaysInside) {
  std::mt19937 rng(9);
  GammaShape G = GammaShape::coordinates(2);
  for (int t = 0; t < 20; ++t) {
    auto A = random_traceless(rng, 2, 3);
    auto r = gamma_polar_membership(G, A, {CMatrix::Zero(1, 1), CMatrix::Zero(1, 1)});
    EXPECT_EQ(r.included, Answer::yes) << r.message;
  }
}

TEST(GammaConvexity, CombinationsStayInsideGammaSpectrahedra) {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  auto G = y_squared();
  int checked = 0;
  while (checked < 50) {
    std::vector<CMatrix> A{CMatrix::Identity(3, 3), random_hermitian(rng, 3), random_hermitian(rng, 3),
                           random_hermitian(rng, 3)};
    for (int i = 1; i < 4; ++i) A[i] *= 0.6 / A[i].norm();
    GammaPencil L(G, A);
    // Pieces share a scalar y-part, so every split of the stacked tuple reduces it.
    const double yc = u(rng);
    std::vector<std::vector<CMatrix>> pieces;
    std::vector<CMatrix> Vs;
    CMatrix W = testing::random_isometry(rng, 4, 2);
    bool inside = true;
    for (int i = 0; i < 2; ++i) {
      CMatrix X = random_hermitian(rng, 2);
      X *= 0.8 / X.norm();
      std::vector<CMatrix> Z{X, yc * CMatrix::Identity(2, 2)};
      inside = inside && gamma_spectrahedron_membership(L, Z).member;
      pieces.push_back(Z);
      Vs.push_back(W.middleRows(2 * i, 2));
    }
    if (!inside) continue;
    auto c = gamma_convex_combine(G, pieces, Vs);
    EXPECT_TRUE(gamma_spectrahedron_membership(L, c.X, 1e-9).member);
    ++checked;
  }
}

}  // namespace
}  // namespace gammahull
