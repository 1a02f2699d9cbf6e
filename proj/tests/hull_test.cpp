#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gammahull/hull.hpp"
#include "test_util.hpp"

namespace gammahull {
namespace {

MatrixPolynomial var(int g, int i) { return MatrixPolynomial::variable(g, i); }
MatrixPolynomial cst(int g, double c) { return MatrixPolynomial::scalar(g, c); }
CMatrix scalar(double v) { return CMatrix::Constant(1, 1, v); }

MatrixPolynomial tv(int power) {
  auto x = var(2, 0), y = var(2, 1);
  auto yp = cst(2, 1);
  for (int i = 0; i < power; ++i) yp = yp * y;
  return cst(2, 1) - x * x - yp;
}
MatrixPolynomial box() {
  auto x = var(2, 0), y = var(2, 1);
  return direct_sum({cst(2, 1) - Complex(2.0) * y * y + x * x, cst(2, 1) - x * x});
}
GammaShape y_squared() { return GammaShape(2, {var(2, 1) * var(2, 1)}); }

std::vector<CMatrix> bent_anchor(double t) {
  CMatrix X = CMatrix::Zero(2, 2), Y = CMatrix::Constant(2, 2, 0.5 * t);
  X(0, 0) = t;
  return {X, Y};
}

TEST(BuildLift, BlockSizes) {
  auto G = y_squared();
  auto tv4 = build_lift(tv(4), G, {scalar(0.5), scalar(0.5)}, 0);
  EXPECT_EQ(tv4.eta(), 2);
  EXPECT_EQ(tv4.hankel_dim(), 7);
  EXPECT_EQ(tv4.localizing_dim(), 1);
  // 22 representatives of degree <= 4 minus e, x, y, all real scalars.
  EXPECT_EQ(tv4.num_params(), 19);
  EXPECT_TRUE(tv4.real_mode());

  auto bent = build_lift(tv(6), G, bent_anchor(0.865), 0);
  EXPECT_EQ(bent.eta(), 3);
  EXPECT_EQ(bent.hankel_dim(), 30);
  EXPECT_EQ(bent.localizing_dim(), 2);

  auto bx = build_lift(box(), G, {scalar(0), scalar(0.9)}, 0);
  EXPECT_EQ(bx.hankel_dim(), 3);
  EXPECT_EQ(bx.localizing_dim(), 2);

  auto cx = build_lift(tv(4), G, {CMatrix::Identity(2, 2) * 0.1, CMatrix::Identity(2, 2) * 0.2}, 0,
                       LiftOptions{std::nullopt, 10.0, true});
  EXPECT_FALSE(cx.real_mode());
  // Complex mode: palindromes 4 real parameters, others 8, over 2x2 blocks.
  EXPECT_EQ(cx.num_params(), 4 * 10 + 8 * 9);
}

TEST(BuildLift, Errors) {
  auto y = var(2, 1);
  GammaShape quartic(2, {y * y * y * y});
  auto x = var(2, 0);
  auto p = cst(2, 1) - x * x;
  EXPECT_THROW(build_lift(p, quartic, {scalar(0), scalar(0)}, 0), std::invalid_argument);
  EXPECT_NO_THROW(build_lift(p, quartic, {scalar(0), scalar(0)}, 1));
  EXPECT_THROW(build_lift(x * y, y_squared(), {scalar(0), scalar(0)}, 0), std::invalid_argument);
}

TEST(BuildLift, CanonicalMomentsAreFeasibleParameters) {
  std::mt19937 rng(1);
  auto G = y_squared();
  auto p = tv(4);
  // Gamma-pair: y block diagonal, V the first coordinate block.
  CMatrix Zx = testing::random_hermitian(rng, 3), Zy = CMatrix::Zero(3, 3);
  Zy.topLeftCorner(2, 2) = testing::random_hermitian(rng, 2);
  Zy(2, 2) = 0.3;
  Zx *= 0.5 / Zx.norm();
  Zy *= 0.5 / Zy.norm();
  CMatrix V = CMatrix::Zero(3, 2);
  V(0, 0) = V(1, 1) = 1;
  auto Y = canonical_moments({Zx, Zy}, V, 4, G);
  auto L = build_lift(p, G, anchor_of(Y), 0);
  // Recover parameters from Y and check the model at that point.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(L.num_params());
  for (const Word& w : L.index().representatives()) {
    if (w.size() < 2) continue;
    const CMatrix v = Y.at(w);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto [c, t] = L.entry(w, i, j);
        for (auto& [q, k] : t) {
          if (k == Complex(1.0)) y(q) = v(i, j).real();
          if (k == Complex(0, 1)) y(q) = v(i, j).imag();
        }
      }
  }
  EXPECT_LT(L.model().equality_residual(y), 1e-12);
  EXPECT_LT((L.model().block_value(0, y) - hankel(Y, 2)).norm(), 1e-12);
  EXPECT_LT((L.model().block_value(1, y) - localizing(Y, p, 0)).norm(), 1e-12);
  EXPECT_LT(L.moments(y).at(Word{0, 1, 1, 0}).isApprox(Y.at(Word{0, 1, 1, 0})) ? 0.0 : 1.0, 0.5);
}

TEST(Membership, Examples) {
  auto G = y_squared();
  auto v = membership(box(), G, {scalar(0), scalar(0.9)}, 0);
  EXPECT_EQ(v.status, LevelStatus::member_at_level);
  EXPECT_GT(v.margin, 1e-4);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_TRUE(validate_moment_sequence(*v.witness, G, {std::nullopt, 1e-7}).ok());

  auto w = membership(tv(4), G, {scalar(0.8), scalar(0.8)}, 0);
  EXPECT_EQ(w.status, LevelStatus::not_member_at_level);
  EXPECT_FALSE(w.witness.has_value());
}

TEST(Membership, BentTvAnchor) {
  // Without the y^2 relation the level-0 lift at t' = 0.865 is strictly feasible.
  auto free = membership(tv(6), GammaShape::coordinates(2), bent_anchor(0.865), 0);
  EXPECT_EQ(free.status, LevelStatus::member_at_level);
  EXPECT_GT(free.hankel_margin, 1e-5);
  EXPECT_GT(free.localizing_margin, 1e-4);
  // With Y_yy pinned to (t'Y)^2 the same lift is infeasible (cross-checked by an independent solver).
  auto pinned = membership(tv(6), y_squared(), bent_anchor(0.865), 0);
  EXPECT_EQ(pinned.status, LevelStatus::not_member_at_level);
}

TEST(Membership, TraceMinObjective) {
  MembershipOptions opt;
  opt.objective = Objective::trace_min;
  auto v = membership(box(), y_squared(), {scalar(0), scalar(0.9)}, 1, opt);
  EXPECT_EQ(v.status, LevelStatus::member_at_level);
  auto w = membership(box(), y_squared(), {scalar(0), scalar(1.2)}, 0, opt);
  EXPECT_EQ(w.status, LevelStatus::not_member_at_level);
}

TEST(MembershipProperties, SoundOnPositivityDomain) {
  std::mt19937 rng(2);
  auto G = y_squared();
  auto p = tv(4);
  int tested = 0;
  while (tested < 50) {
    const int n = 1 + tested % 2;
    CMatrix X = testing::random_hermitian(rng, n), Y = testing::random_hermitian(rng, n);
    const double s = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
    X *= s / X.norm();
    Y *= s / Y.norm();
    if (min_eigenvalue(evaluate(p, {X, Y})) < 1e-3) continue;
    for (int d = 0; d <= (n == 1 ? 1 : 0); ++d) {
      auto v = membership(p, G, {X, Y}, d);
      EXPECT_EQ(v.status, LevelStatus::member_at_level) << "n=" << n << " d=" << d << " " << v.message << " m=" << v.margin << " hm=" << v.hankel_margin << " lm=" << v.localizing_margin << " db=" << v.dual_bound << " free=" << v.free_params;
    }
    ++tested;
  }
}

TEST(MembershipProperties, LevelsAreMonotone) {
  auto G = y_squared();
  for (const auto& p : {tv(4), box()})
    for (double a = -1.3; a <= 1.3; a += 0.26)
      for (double b = -1.3; b <= 1.3; b += 0.26) {
        auto v1 = membership(p, G, {scalar(a), scalar(b)}, 1);
        if (v1.status != LevelStatus::member_at_level) continue;
        auto v0 = membership(p, G, {scalar(a), scalar(b)}, 0);
        EXPECT_NE(v0.status, LevelStatus::not_member_at_level) << a << "," << b;
      }
}

TEST(LiftPencil, BoxLevelZero) {
  auto G = y_squared();
  auto L = emit_lift_pencil(box(), G, 0);
  ASSERT_EQ(L.pencil.lifted.size(), 3u);
  EXPECT_EQ(L.lifted_words[0], (Word{0, 0}));
  EXPECT_EQ(L.lifted_part[1], 'c');
  EXPECT_EQ(L.lifted_part[2], 'd');
  EXPECT_EQ(L.pencil.base.size(), 5);
  auto in = spectrahedrop_membership(L.pencil, {scalar(0), scalar(0.9)});
  EXPECT_EQ(in.member, Answer::yes);
  auto out = spectrahedrop_membership(L.pencil, {scalar(0), scalar(1.2)});
  EXPECT_EQ(out.member, Answer::no);
  EXPECT_EQ(in.member == Answer::yes, membership(box(), G, {scalar(0), scalar(0.9)}, 0).status ==
                                          LevelStatus::member_at_level);
}

TEST(LiftPencil, SubstitutionReproducesBlocks) {
  std::mt19937 rng(3);
  auto G = y_squared();
  for (int d = 0; d <= 1; ++d) {
    auto L = emit_lift_pencil(tv(4), G, d);
    CMatrix Zx = testing::random_hermitian(rng, 3), Zy = CMatrix::Zero(3, 3);
    Zy.topLeftCorner(2, 2) = testing::random_hermitian(rng, 2);
    Zy(2, 2) = -0.4;
    CMatrix V = CMatrix::Zero(3, 2);
    V(0, 0) = V(1, 1) = 1;
    auto Y = canonical_moments({Zx, Zy}, V, 2 * L.eta, G);
    EXPECT_LT(lift_pencil_substitution_error(L, tv(4), anchor_of(Y), Y), 1e-12);
  }
  // Gamma = x: no gamma part, every moment of degree >= 2 is lifted.
  auto x = var(1, 0);
  auto p1 = cst(1, 1) - x * x;
  auto L1 = emit_lift_pencil(p1, GammaShape::coordinates(1), 1);
  EXPECT_EQ(L1.pencil.base.coeffs().size(), 2u);
  EXPECT_EQ(L1.pencil.lifted.size(), 3u);  // x^2, x^3, x^4
  auto Y1 = canonical_moments({scalar(0.3)}, scalar(1), 4);
  EXPECT_LT(lift_pencil_substitution_error(L1, p1, {scalar(0.3)}, Y1), 1e-14);
}

TEST(Gns, ScalarPoint) {
  std::vector<CMatrix> z{scalar(0.5), scalar(0.5)};
  auto Y = canonical_moments(z, scalar(1), 4);
  auto r = gns_extract(Y, tv(4), y_squared(), 2);
  ASSERT_TRUE(r.success) << r.message;
  EXPECT_EQ(r.rank, 1);
  EXPECT_NEAR(std::abs(r.V(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(r.Z[0](0, 0).real(), 0.5, 1e-10);
  EXPECT_NEAR(r.Z[1](0, 0).real(), 0.5, 1e-10);
}

TEST(Gns, ReproducesCanonicalMoments) {
  std::mt19937 rng(4);
  auto p = tv(4);
  for (int t = 0; t < 10; ++t) {
    auto Z = testing::random_tuple(rng, 2, 2 + t % 2, 0.7);
    auto Y = canonical_moments(Z, CMatrix::Identity(Z[0].rows(), Z[0].rows()), 8);
    auto r = gns_extract(Y, p, GammaShape::coordinates(2), 4);
    ASSERT_TRUE(r.success) << r.message;
    EXPECT_LE(r.residual_moments, 1e-8);
    EXPECT_GE(r.residual_psd, -1e-8);
  }
}

TEST(Gns, HalfHalfWitness) {
  const double h = 1.0 / std::sqrt(2.0);
  CMatrix Zx = CMatrix::Zero(2, 2), V(2, 1);
  Zx(0, 0) = 1;
  Zx(1, 1) = -1;
  V << h, h;
  auto G = y_squared();
  auto Y = canonical_moments({Zx, 0.9 * CMatrix::Identity(2, 2)}, V, 4, G);
  GnsOptions opt;
  opt.shift = 1;
  auto r = gns_extract(Y, box(), G, 2, opt);
  ASSERT_TRUE(r.success) << r.message;
  EXPECT_EQ(r.rank, 2);
  auto ex = eigenvalues(r.Z[0]);
  EXPECT_NEAR(ex(0), -1.0, 1e-10);
  EXPECT_NEAR(ex(1), 1.0, 1e-10);
  EXPECT_LT((r.Z[1] - 0.9 * CMatrix::Identity(2, 2)).norm(), 1e-10);
  EXPECT_GE(r.residual_psd, -1e-10);
  // Default shift deg p = 2 compares H_0 with H_2, which is not flat here.
  EXPECT_FALSE(gns_extract(Y, box(), G, 2).success);
}

TEST(Hierarchy, TvInsidePointIsCertified) {
  auto rep = run_hierarchy(tv(4), y_squared(), {scalar(0.5), scalar(0.5)}, 1);
  EXPECT_EQ(rep.outcome, HierarchyOutcome::member_certified) << rep.message;
  EXPECT_EQ(rep.decided_level, 0);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_LE(rep.witness_error, 1e-7);
}

TEST(Hierarchy, BoxOutsidePointIsSeparated) {
  auto rep = run_hierarchy(box(), y_squared(), {scalar(0), scalar(1.2)}, 1);
  EXPECT_EQ(rep.outcome, HierarchyOutcome::not_member) << rep.message;
  ASSERT_TRUE(rep.separation.has_value());
  EXPECT_GE(rep.separation->violation, 0.44 - 1e-6);
}

TEST(Hierarchy, BoxHullPointIsCertified) {
  auto G = y_squared();
  std::vector<CMatrix> X{scalar(0), scalar(0.9)};
  auto rep = run_hierarchy(box(), G, X, 1);
  ASSERT_EQ(rep.outcome, HierarchyOutcome::member_certified) << rep.message;
  const auto& w = *rep.witness;
  EXPECT_TRUE(gamma_pair_check(G, w.Z, w.V).ok);
  EXPECT_LE((w.V.adjoint() * w.Z[0] * w.V - X[0]).norm(), 1e-7);
  EXPECT_LE((w.V.adjoint() * w.Z[1] * w.V - X[1]).norm(), 1e-7);
  EXPECT_GE(min_eigenvalue(evaluate(box(), w.Z)), -1e-7);
}

TEST(Hierarchy, TvOutsidePointIsSeparated) {
  auto rep = run_hierarchy(tv(4), y_squared(), {scalar(0.8), scalar(0.8)}, 0);
  EXPECT_EQ(rep.outcome, HierarchyOutcome::not_member) << rep.message;
}

TEST(Hierarchy, WitnessesAreValidGammaPairs) {
  std::mt19937 rng(4);
  auto G = y_squared();
  int certified = 0;
  for (int t = 0; t < 10; ++t) {
    std::uniform_real_distribution<double> U(-1.2, 1.2);
    std::vector<CMatrix> X{scalar(U(rng)), scalar(U(rng))};
    auto rep = run_hierarchy(box(), G, X, 0);
    EXPECT_TRUE(rep.monotone);
    if (rep.outcome != HierarchyOutcome::member_certified) continue;
    ++certified;
    EXPECT_TRUE(gamma_pair_check(G, rep.witness->Z, rep.witness->V).ok);
    EXPECT_LE(rep.witness_error, 1e-7);
  }
  EXPECT_GT(certified, 0);
}

}  // namespace
}  // namespace gammahull
