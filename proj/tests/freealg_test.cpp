#include <gtest/gtest.h>

#include "gammahull/freealg.hpp"
#include "test_util.hpp"

namespace gammahull {
namespace {

using testing::random_hermitian;
using testing::random_polynomial;

MatrixPolynomial X(int g, int i) { return MatrixPolynomial::variable(g, i); }
MatrixPolynomial C(int g, double c) { return MatrixPolynomial::scalar(g, c); }

TEST(Words, EnumerateTwoVariablesDegreeTwo) {
  auto w = enumerate_words(2, 2);
  std::vector<Word> expected{Word(), Word{0}, Word{1}, Word{0, 0}, Word{0, 1}, Word{1, 0}, Word{1, 1}};
  EXPECT_EQ(w, expected);
}

TEST(Words, Counts) {
  EXPECT_EQ(enumerate_words(2, 3).size(), 15u);
  EXPECT_EQ(enumerate_words(1, 0), std::vector<Word>{Word()});
  EXPECT_EQ(enumerate_words(3, 4).size(), 1u + 3 + 9 + 27 + 81);
  EXPECT_THROW(enumerate_words(0, 2), std::invalid_argument);
}

TEST(Words, GradedLexOrderIsStrict) {
  auto w = enumerate_words(3, 3);
  for (std::size_t k = 1; k < w.size(); ++k) EXPECT_TRUE(w[k - 1] < w[k]);
}

TEST(Words, InvolutionAndConcatenation) {
  Word a{0, 1, 1}, b{1, 0};
  EXPECT_EQ(a.adjoint(), (Word{1, 1, 0}));
  EXPECT_EQ(a.adjoint().adjoint(), a);
  EXPECT_EQ((a * b).adjoint(), b.adjoint() * a.adjoint());
  EXPECT_EQ(a * Word(), a);
  EXPECT_EQ(Word() * a, a);
  EXPECT_EQ((a * b) * a, a * (b * a));
  EXPECT_TRUE((Word{0, 1, 0}).is_palindrome());
  EXPECT_FALSE((Word{0, 1}).is_palindrome());
  EXPECT_EQ(canonical(Word{1, 0, 0}), (Word{0, 0, 1}));
}

TEST(Polynomial, AdjointExamples) {
  EXPECT_EQ(adjoint(X(2, 0) * X(2, 1)), X(2, 1) * X(2, 0));
  auto s = X(2, 0) * X(2, 1) + X(2, 1) * X(2, 0);
  EXPECT_EQ(adjoint(s), s);
  auto ix = Complex(0, 1) * X(2, 0);
  EXPECT_EQ(adjoint(ix), Complex(0, -1) * X(2, 0));
}

TEST(Polynomial, SymmetryExamples) {
  EXPECT_FALSE(is_symmetric(X(2, 0) * X(2, 1)));
  EXPECT_TRUE(is_symmetric(X(2, 0) * X(2, 1) + X(2, 1) * X(2, 0)));
  auto y = X(2, 1);
  auto p = C(2, 1) - X(2, 0) * X(2, 0) - y * y * y * y * y * y;
  EXPECT_TRUE(is_symmetric(p));
  EXPECT_EQ(p.degree(), 6);
  EXPECT_EQ(MatrixPolynomial(2, 1).degree(), 0);
}

TEST(Polynomial, ZeroCoefficientsAreDropped) {
  auto p = X(1, 0) - X(1, 0);
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.degree(), 0);
}

TEST(Evaluate, PauliProduct) {
  CMatrix A(2, 2), B(2, 2);
  A << 0, 1, 1, 0;
  B << 1, 0, 0, -1;
  CMatrix expected(2, 2);
  expected << 0, -1, 1, 0;
  EXPECT_LT((evaluate(X(2, 0) * X(2, 1), {A, B}) - expected).norm(), 1e-15);
}

TEST(Evaluate, ConstantGivesIdentity) {
  std::mt19937 rng(1);
  std::vector<CMatrix> T{random_hermitian(rng, 3)};
  EXPECT_LT((evaluate(C(1, 1.0), T) - CMatrix::Identity(3, 3)).norm(), 1e-15);
  auto block = MatrixPolynomial::constant(1, CMatrix::Identity(2, 2));
  EXPECT_LT((evaluate(block, T) - CMatrix::Identity(6, 6)).norm(), 1e-15);
  EXPECT_LT(evaluate(MatrixPolynomial(1, 1), T).norm(), 1e-15);
}

TEST(Evaluate, ScalarTvScreen) {
  auto x = X(2, 0), y = X(2, 1);
  auto p = C(2, 1) - x * x - y * y * y * y;
  CMatrix h = CMatrix::Constant(1, 1, 0.5);
  EXPECT_NEAR(evaluate(p, {h, h})(0, 0).real(), 0.6875, 1e-15);
}

TEST(Evaluate, KroneckerLayout) {
  // p = E12 x (coefficient (0,1) = 1) evaluated at X gives the (0,1) block X.
  CMatrix E = CMatrix::Zero(2, 2);
  E(0, 1) = 1.0;
  MatrixPolynomial p(1, 2, {{Word{0}, E}});
  std::mt19937 rng(2);
  CMatrix A = random_hermitian(rng, 3);
  CMatrix v = evaluate(p, {A});
  EXPECT_LT((v.block(0, 3, 3, 3) - A).norm(), 1e-15);
  EXPECT_LT(v.block(3, 0, 3, 3).norm(), 1e-15);
  EXPECT_THROW(evaluate(p, {A, A}), std::invalid_argument);
}

TEST(Gamma, MapExamples) {
  std::mt19937 rng(3);
  CMatrix A = random_hermitian(rng, 3), B = random_hermitian(rng, 3);
  auto y = X(2, 1), x = X(2, 0);
  GammaShape G(2, {y * y});
  auto v = gamma_map(G, {A, B});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_LT((v[0] - A).norm(), 1e-15);
  EXPECT_LT((v[2] - B * B).norm(), 1e-13);

  GammaShape H(2, {x * y + y * x, Complex(0, 1) * (x * y - y * x)});
  auto w = gamma_map(H, {A, B});
  EXPECT_LT((w[2] - (A * B + B * A)).norm(), 1e-13);
  EXPECT_LT((w[3] - Complex(0, 1) * (A * B - B * A)).norm(), 1e-13);
  EXPECT_LT((w[3] - w[3].adjoint()).norm(), 1e-13);

  auto z = gamma_map(G, {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)});
  for (auto& m : z) EXPECT_EQ(m.norm(), 0.0);
  EXPECT_TRUE(G.vanishes_at_zero());
  EXPECT_EQ(G.delta(), 2);
  EXPECT_EQ(G.r(), 3);
}

TEST(Gamma, ShapeValidation) {
  auto x = X(2, 0), y = X(2, 1);
  EXPECT_THROW(GammaShape(2, {x * y}), std::invalid_argument);
  EXPECT_THROW(GammaShape::from_list(2, {y, x}), std::invalid_argument);
  EXPECT_NO_THROW(GammaShape::from_list(2, {x, y, y * y}));
  EXPECT_FALSE(GammaShape(2, {y * y - C(2, 0.5)}).vanishes_at_zero());
}

TEST(FreealgProperties, Homomorphism) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 1 + trial % 4;
    auto p = random_polynomial(rng, 2, 1, 3, 5);
    auto q = random_polynomial(rng, 2, 1, 3, 5);
    std::vector<CMatrix> T{random_hermitian(rng, n), random_hermitian(rng, n)};
    CMatrix lhs = evaluate(p * q, T), rhs = evaluate(p, T) * evaluate(q, T);
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * (1.0 + rhs.norm()));
  }
}

TEST(FreealgProperties, AdjointCompatibleWithEvaluation) {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 1 + trial % 4;
    auto p = random_polynomial(rng, 3, 2, 3, 6);
    std::vector<CMatrix> T{random_hermitian(rng, n), random_hermitian(rng, n), random_hermitian(rng, n)};
    CMatrix v = evaluate(p, T);
    EXPECT_LE((evaluate(adjoint(p), T) - v.adjoint()).norm(), 1e-12 * (1.0 + v.norm()));
  }
}

TEST(FreealgProperties, SymmetricEvaluatesHermitian) {
  std::mt19937 rng(13);
  auto p = testing::symmetrized(random_polynomial(rng, 2, 2, 4, 8));
  ASSERT_TRUE(is_symmetric(p));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CMatrix> T{random_hermitian(rng, 3), random_hermitian(rng, 3)};
    CMatrix v = evaluate(p, T);
    EXPECT_LE((v - v.adjoint()).norm(), 1e-12 * (1.0 + v.norm()));
  }
}

}  // namespace
}  // namespace gammahull
