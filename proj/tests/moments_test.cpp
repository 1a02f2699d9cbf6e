#include <gtest/gtest.h>

#include <cmath>

#include "gammahull/moments.hpp"
#include "test_util.hpp"

namespace gammahull {
namespace {

using testing::random_hermitian;

MatrixPolynomial var(int g, int i) { return MatrixPolynomial::variable(g, i); }
MatrixPolynomial cst(int g, double c) { return MatrixPolynomial::scalar(g, c); }

MatrixPolynomial tv4() {
  auto x = var(2, 0), y = var(2, 1);
  return cst(2, 1) - x * x - y * y * y * y;
}

// A pair (Z, V) with Z_y = B1 (+) B2 so that V = [I; 0] reduces Z_y.
struct ReducedPair {
  std::vector<CMatrix> Z;
  CMatrix V;
};

ReducedPair reduced_pair(std::mt19937& rng, int n, int extra, double norm) {
  const int N = n + extra;
  CMatrix X = random_hermitian(rng, N);
  CMatrix Y = CMatrix::Zero(N, N);
  Y.topLeftCorner(n, n) = random_hermitian(rng, n);
  if (extra) Y.bottomRightCorner(extra, extra) = random_hermitian(rng, extra);
  std::vector<CMatrix> Z{X, Y};
  const double t = tuple_norm(Z);
  for (auto& z : Z) z *= norm / t;
  CMatrix V = CMatrix::Zero(N, n);
  V.topRows(n) = CMatrix::Identity(n, n);
  return {Z, V};
}

TEST(MomentIndex, RepresentativesArePairCanonical) {
  MomentIndex I(2, 4);
  for (const Word& w : I.words()) {
    const Word& r = I.representatives()[I.rep_position(w)];
    EXPECT_TRUE(r == w || r == w.adjoint());
    EXPECT_FALSE(w.adjoint() < r);
  }
  // 31 words of length <= 4 over 2 letters; palindromes 1+2+2+4+4 = 13, pairs (31-13)/2 = 9.
  EXPECT_EQ(I.representatives().size(), 22u);
}

TEST(CanonicalMoments, ScalarPowers) {
  std::vector<CMatrix> z{CMatrix::Constant(1, 1, 0.5), CMatrix::Constant(1, 1, 0.5)};
  auto Y = canonical_moments(z, CMatrix::Identity(1, 1), 4);
  for (const Word& w : Y.index().words()) EXPECT_NEAR(Y.at(w)(0, 0).real(), std::pow(0.5, w.size()), 1e-15);
}

TEST(CanonicalMoments, IdentityCompressionAndBound) {
  std::mt19937 rng(1);
  auto Z = testing::random_tuple(rng, 2, 3, 0.9);
  auto Y = canonical_moments(Z, CMatrix::Identity(3, 3), 5);
  EXPECT_LT((Y.at(Word{0}) - Z[0]).norm(), 1e-15);
  EXPECT_LT((Y.at(Word{1}) - Z[1]).norm(), 1e-15);
  const double k = tuple_norm(Z);
  ValidationOptions opt;
  opt.check_bound_k = k;
  EXPECT_TRUE(validate_moment_sequence(Y, GammaShape::coordinates(2), opt).ok());
  EXPECT_THROW(canonical_moments(Z, CMatrix::Ones(3, 1), 2), std::invalid_argument);
}

TEST(CanonicalMoments, GammaFaithfulnessChecked) {
  CMatrix Yoff(2, 2);
  Yoff << 0, 1, 1, 0;
  std::vector<CMatrix> Z{CMatrix::Zero(2, 2), Yoff};
  CMatrix e1 = CMatrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  auto y = var(2, 1);
  GammaShape G(2, {y * y});
  EXPECT_THROW(canonical_moments(Z, e1, 2, G), std::invalid_argument);
  EXPECT_NO_THROW(canonical_moments(Z, e1, 2, GammaShape::coordinates(2)));
}

TEST(Hankel, BlockSizes) {
  std::mt19937 rng(2);
  auto Z = testing::random_tuple(rng, 2, 2, 0.8);
  auto Y = canonical_moments(Z, CMatrix::Identity(2, 2), 6);
  EXPECT_EQ(hankel(Y, 2).rows(), 14);
  EXPECT_EQ(hankel(Y, 3).rows(), 30);
  EXPECT_THROW(hankel(Y, 4), std::invalid_argument);
  // Block (x1, x2) holds Y_{x1 x2}.
  CMatrix H = hankel(Y, 1);
  EXPECT_LT((H.block(2, 4, 2, 2) - Z[0] * Z[1]).norm(), 1e-14);
}

TEST(Localizing, LevelZeroExamples) {
  std::mt19937 rng(3);
  auto Z = testing::random_tuple(rng, 2, 2, 0.7);
  auto Y = canonical_moments(Z, CMatrix::Identity(2, 2), 4);
  CMatrix L = localizing(Y, tv4(), 0);
  CMatrix expect = CMatrix::Identity(2, 2) - Y.at(Word{0, 0}) - Y.at(Word{1, 1, 1, 1});
  EXPECT_LT((L - expect).norm(), 1e-14);

  auto x = var(2, 0), y = var(2, 1);
  auto p = direct_sum({cst(2, 1) - Complex(2.0) * y * y + x * x, cst(2, 1) - x * x});
  CMatrix L2 = localizing(Y, p, 0);
  EXPECT_LT((L2.topLeftCorner(2, 2) - (CMatrix::Identity(2, 2) - 2.0 * Y.at(Word{1, 1}) + Y.at(Word{0, 0}))).norm(), 1e-14);
  EXPECT_LT((L2.bottomRightCorner(2, 2) - (CMatrix::Identity(2, 2) - Y.at(Word{0, 0}))).norm(), 1e-14);
  EXPECT_LT(L2.topRightCorner(2, 2).norm(), 1e-15);
  EXPECT_THROW(localizing(Y, x * y, 0), std::invalid_argument);
  EXPECT_THROW(localizing(Y, tv4(), 1), std::invalid_argument);
}

TEST(GammaConstraints, Examples) {
  auto x = var(2, 0), y = var(2, 1);
  std::mt19937 rng(4);
  CMatrix A = random_hermitian(rng, 2), B = random_hermitian(rng, 2);
  auto set = gamma_constraints(GammaShape(2, {y * y}), std::vector<CMatrix>{A, B}, 4);
  ASSERT_EQ(set.relations.size(), 1u);
  EXPECT_EQ(set.relations[0].terms.size(), 1u);
  EXPECT_EQ(set.relations[0].terms[0].first, (Word{1, 1}));
  EXPECT_LT((*set.relations[0].rhs - B * B).norm(), 1e-14);

  EXPECT_TRUE(gamma_constraints(GammaShape::coordinates(2), std::vector<CMatrix>{A, B}, 4).relations.empty());

  GammaShape H(2, {x * y + y * x, Complex(0, 1) * (x * y - y * x)});
  auto s2 = gamma_constraints(H, std::vector<CMatrix>{A, B}, 2);
  ASSERT_EQ(s2.relations.size(), 2u);
  EXPECT_EQ(s2.relations[0].terms.size(), 2u);
  EXPECT_LT((*s2.relations[0].rhs - (A * B + B * A)).norm(), 1e-13);
  EXPECT_LT((*s2.relations[1].rhs - Complex(0, 1) * (A * B - B * A)).norm(), 1e-13);
  EXPECT_FALSE(gamma_constraints(H, std::nullopt, 2).relations[0].rhs.has_value());
  EXPECT_THROW(gamma_constraints(H, std::nullopt, 1), std::invalid_argument);
}

TEST(Validate, CanonicalIsCleanAndDefectsAreReported) {
  std::mt19937 rng(5);
  auto pr = reduced_pair(rng, 2, 1, 0.7);
  auto y = var(2, 1);
  GammaShape G(2, {y * y});
  auto Y = canonical_moments(pr.Z, pr.V, 4, G);
  EXPECT_TRUE(validate_moment_sequence(Y, G).ok());
  auto bad = Y;
  CMatrix v = bad.at(Word{0, 1, 0});
  v(0, 1) += 0.1;
  bad.set(Word{0, 1, 0}, v);
  auto rep = validate_moment_sequence(bad, G);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].kind, "adjoint");
  // A non-reducing compression breaks the y^2 relation.
  auto Z2 = testing::random_tuple(rng, 2, 3, 0.7);
  CMatrix V2 = testing::random_isometry(rng, 3, 2);
  auto Y2 = canonical_moments(Z2, V2, 2);
  auto rep2 = validate_moment_sequence(Y2, G);
  ASSERT_EQ(rep2.violations.size(), 1u);
  EXPECT_EQ(rep2.violations[0].kind, "gamma");
}

TEST(Flatness, Examples) {
  std::vector<CMatrix> z{CMatrix::Constant(1, 1, 0.3), CMatrix::Constant(1, 1, -0.6)};
  auto Y = canonical_moments(z, CMatrix::Identity(1, 1), 6);
  for (int d = 0; d <= 3; ++d) EXPECT_TRUE(is_flat(Y, 3, d).flat);

  std::mt19937 rng(6);
  auto Z = testing::random_tuple(rng, 2, 3, 0.9);
  auto Y3 = canonical_moments(Z, CMatrix::Identity(3, 3), 8);
  auto f = is_flat(Y3, 4, 1);
  EXPECT_TRUE(f.flat);
  EXPECT_EQ(f.rank_high, 3);  // rank H is at most N for V = I
  EXPECT_EQ(numerical_rank(hankel(Y3, 0)), 3);

  MomentSequence R(MomentIndex(2, 4), 1);
  for (const Word& w : R.index().representatives())
    if (!w.empty()) R.set(w, CMatrix::Constant(1, 1, std::normal_distribution<double>()(rng)));
  EXPECT_FALSE(is_flat(R, 2, 1).flat);
  EXPECT_THROW(is_flat(R, 3, 1), std::invalid_argument);
}

TEST(MomentsProperties, PsdForGammaPairsInDomain) {
  std::mt19937 rng(7);
  auto y = var(2, 1);
  GammaShape G(2, {y * y});
  auto p = tv4();
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 2, extra = t % 3;
    auto pr = reduced_pair(rng, n, extra, 0.7);
    ASSERT_GE(min_eigenvalue(evaluate(p, pr.Z)), 0.0);
    auto Y = canonical_moments(pr.Z, pr.V, 6, G);
    CMatrix H = hankel(Y, 3), L = localizing(Y, p, 1);
    EXPECT_GE(min_eigenvalue(H), -1e-9 * std::max(1.0, H.norm()));
    EXPECT_GE(min_eigenvalue(L), -1e-9 * std::max(1.0, L.norm()));
    EXPECT_TRUE(validate_moment_sequence(Y, G).ok());
  }
}

TEST(MomentsProperties, HankelIsGramOfWordVectors) {
  std::mt19937 rng(8);
  for (int t = 0; t < 20; ++t) {
    const int N = 2 + t % 3;
    auto Z = testing::random_tuple(rng, 2, N, 1.0, t % 2);
    auto Y = canonical_moments(Z, CMatrix::Identity(N, N), 4);
    const auto words = enumerate_words(2, 2);
    CMatrix K(N, N * words.size());
    for (std::size_t a = 0; a < words.size(); ++a) K.middleCols(a * N, N) = evaluate_word(words[a], Z);
    CMatrix H = hankel(Y, 2);
    EXPECT_LT((H - K.adjoint() * K).norm(), 1e-12 * H.norm());
    Eigen::ColPivHouseholderQR<CMatrix> qr(K);
    qr.setThreshold(1e-10);
    EXPECT_EQ(numerical_rank(H), qr.rank());
  }
}

TEST(Exact, RationalArithmetic) {
  using exact::parse_rational;
  EXPECT_EQ(parse_rational("-2/39") * 39, -2);
  EXPECT_EQ(exact::to_rational(0.75), parse_rational("3/4"));
  exact::RationalMatrix M(2, 2);
  M << 2, 1, 1, 2;
  EXPECT_TRUE(exact::positive_definite(M));
  M(1, 1) = parse_rational("1/2");
  EXPECT_FALSE(exact::positive_definite(M));
}

}  // namespace
}  // namespace gammahull
