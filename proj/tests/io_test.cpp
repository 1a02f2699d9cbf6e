#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "gammahull/hull.hpp"
#include "gammahull/io.hpp"
#include "test_util.hpp"

namespace gammahull {
namespace {

std::string fixture(const std::string& name) { return std::string(GAMMAHULL_FIXTURE_DIR) + "/" + name; }

std::string temp_file(const std::string& tag, const std::string& contents) {
  std::string path = ::testing::TempDir() + "gammahull_" + tag + ".json";
  std::ofstream(path) << contents;
  return path;
}

TEST(Problem, Tv4Fixture) {
  auto f = io::parse_problem(fixture("tv4.json"));
  auto x = MatrixPolynomial::variable(2, 0), y = MatrixPolynomial::variable(2, 1);
  EXPECT_EQ(f.p, MatrixPolynomial::scalar(2, 1) - x * x - y * y * y * y);
  ASSERT_EQ(f.gamma.r(), 3);
  EXPECT_EQ(f.gamma[2], y * y);
  ASSERT_TRUE(f.archimedean_k.has_value());
  EXPECT_EQ(*f.archimedean_k, 2.0);
  EXPECT_EQ(f.anchors.at("inside")[1](0, 0), Complex(0.5));
}

TEST(Problem, FixturesRoundTrip) {
  for (const char* name : {"box.json", "tv4.json", "bent_tv.json", "parabola.json"}) {
    auto a = io::parse_problem(fixture(name));
    auto j = io::to_json(a);
    auto b = io::problem_from_json(j);
    EXPECT_EQ(a.p, b.p) << name;
    EXPECT_EQ(a.name, b.name);
    ASSERT_EQ(a.gamma.r(), b.gamma.r());
    for (int k = 0; k < a.gamma.r(); ++k) EXPECT_EQ(a.gamma[k], b.gamma[k]);
    ASSERT_EQ(a.anchors.size(), b.anchors.size());
    for (const auto& [k, X] : a.anchors)
      for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(X[i], b.anchors.at(k)[i]);
    EXPECT_EQ(a.archimedean_k, b.archimedean_k);
    EXPECT_EQ(a.pencil.has_value(), b.pencil.has_value());
    EXPECT_EQ(io::to_json(b).dump(), j.dump()) << name;
  }
}

TEST(Problem, ParabolaPencilContainsGammaImage) {
  auto f = io::parse_problem(fixture("parabola.json"));
  ASSERT_TRUE(f.pencil.has_value());
  std::mt19937 rng(3);
  int inside = 0;
  for (int t = 0; t < 400 && inside < 40; ++t) {
    auto X = testing::random_tuple(rng, 2, 2, 1.8);
    if (min_eigenvalue(evaluate(f.p, X)) < 0) continue;
    ++inside;
    EXPECT_GE(min_eigenvalue(evaluate(*f.pencil, X)), -1e-10);
  }
  EXPECT_GT(inside, 10);
}

TEST(Problem, Errors) {
  EXPECT_THROW(io::parse_problem(temp_file("empty", "")), io::ParseError);
  EXPECT_THROW(io::parse_problem("/nonexistent/problem.json"), io::ParseError);
  const std::string head = R"({"version": "gammahull-problem/1", "variables": 2,)";
  const std::string gamma = R"("gamma": [[{"word": [1], "coef": 1}], [{"word": [2], "coef": 1}]],)";
  // asymmetric p
  try {
    io::parse_problem(temp_file("asym", head + gamma + R"("p": {"mu": 1, "terms": [{"word": [1, 2], "coef": 1}]}})"));
    FAIL();
  } catch (const io::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("symmetric"), std::string::npos);
  }
  // first gamma is not x1
  try {
    io::parse_problem(temp_file(
        "gam", head + R"("gamma": [[{"word": [2], "coef": 1}], [{"word": [2], "coef": 1}]], "p": [{"word": [], "coef": 1}]})"));
    FAIL();
  } catch (const io::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma[0]"), std::string::npos);
  }
  // field-precise diagnostics
  try {
    io::parse_problem(temp_file("coef", head + gamma + R"("p": {"mu": 1, "terms": [{"word": [], "coef": "x"}]}})"));
    FAIL();
  } catch (const io::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("p.terms[0].coef"), std::string::npos) << e.what();
  }
  try {
    io::parse_problem(temp_file("letter", head + gamma + R"("p": {"mu": 1, "terms": [{"word": [3], "coef": 1}]}})"));
    FAIL();
  } catch (const io::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("p.terms[0].word[0]"), std::string::npos) << e.what();
  }
  EXPECT_THROW(io::parse_problem(temp_file("missing", head + gamma + "\"q\": 1}")), io::ParseError);
}

TEST(Point, Shorthand) {
  auto X = io::parse_scalar_point("(0.5, -1e-1)");
  ASSERT_EQ(X.size(), 2u);
  EXPECT_EQ(X[1](0, 0), Complex(-0.1));
  EXPECT_THROW(io::parse_scalar_point("0.5,0.5"), io::ParseError);
  EXPECT_THROW(io::parse_scalar_point("(0.5,a)"), io::ParseError);
  EXPECT_THROW(io::parse_scalar_point("(0.5,)"), io::ParseError);
}

TEST(Certificate, SeparationRoundTrip) {
  auto f = io::parse_problem(fixture("box.json"));
  const auto& X = f.anchors.at("outside");
  auto cert = separate(f.p, f.gamma, X, 2);
  ASSERT_TRUE(cert.has_value());
  auto j = io::to_json(*cert, X);
  auto back = io::certificate_from_json(io::Json::parse(j.dump()));
  ASSERT_TRUE(back.separation.has_value());
  ASSERT_TRUE(back.point.has_value());
  auto r = verify_certificate(*back.separation, f.p, back.point);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(io::to_json(*back.separation, back.point).dump(), j.dump());
}

TEST(Certificate, QmRoundTrip) {
  auto f = io::parse_problem(fixture("tv4.json"));
  auto c = archimedean_certificate(f.p, 2.0, 2);
  ASSERT_TRUE(c.has_value());
  auto back = io::certificate_from_json(io::Json::parse(io::to_json(*c, 2).dump()));
  ASSERT_TRUE(back.qm.has_value());
  EXPECT_TRUE(verify_certificate(*back.qm).ok);
}

TEST(Moments, BentCertificateLoads) {
  auto m = io::parse_moments(fixture("bent_tv_certificate.json"));
  EXPECT_EQ(m.n, 2);
  EXPECT_EQ(m.degree, 6);
  // Every canonical word of degree <= 6 is listed.
  for (const Word& w : m.moments.index().representatives()) EXPECT_TRUE(m.moments.has(w)) << w.str();
  const exact::RationalMatrix X = m.moments.at(Word{0});
  EXPECT_TRUE(X(0, 0) == exact::parse_rational("173/200"));
  EXPECT_TRUE(X(1, 1) == 0);
  EXPECT_TRUE(m.moments.at(Word{0, 0})(0, 1) == exact::parse_rational("-2/39"));
}

}  // namespace
}  // namespace gammahull
