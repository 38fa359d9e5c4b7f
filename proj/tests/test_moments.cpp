#include "qhedge/moments.hpp"

#include <gtest/gtest.h>

#include "fixtures.hpp"

using qhedge::AdaptedProcess;
using qhedge::FiltrationTree;
using qhedge::Rational;

namespace {

struct OneStep {
  FiltrationTree<Rational> tree;
  AdaptedProcess<Rational> x, y;
};

OneStep binomial_x() {
  OneStep s{FiltrationTree<Rational>::build({{"", std::nullopt, Rational(1)},
                                             {"H", "", Rational(1, 2)},
                                             {"T", "", Rational(1, 2)}}),
            {}, {}};
  s.x = AdaptedProcess<Rational>(3);
  s.x.set(s.tree.find("H"), Rational(4));
  s.x.set(s.tree.find("T"), Rational(-2));
  return s;
}

OneStep trinomial_xy() {
  OneStep s{FiltrationTree<Rational>::build({{"", std::nullopt, Rational(1)},
                                             {"U", "", Rational(1, 3)},
                                             {"M", "", Rational(1, 3)},
                                             {"D", "", Rational(1, 3)}}),
            {}, {}};
  s.x = AdaptedProcess<Rational>(4);
  s.y = AdaptedProcess<Rational>(4);
  s.x.set(s.tree.find("U"), Rational(4));
  s.x.set(s.tree.find("M"), Rational(0));
  s.x.set(s.tree.find("D"), Rational(-2));
  s.y.set(s.tree.find("U"), Rational(5));
  s.y.set(s.tree.find("M"), Rational(1));
  s.y.set(s.tree.find("D"), Rational(0));
  return s;
}

}  // namespace

TEST(CondExpect, ConstantProcess) {
  auto s = binomial_x();
  const auto c = AdaptedProcess<Rational>::constant(s.tree, Rational(7));
  EXPECT_EQ(qhedge::cond_expect(s.tree, c, s.tree.root()), Rational(7));
}

TEST(CondExpect, HandValues) {
  auto b = binomial_x();
  EXPECT_EQ(qhedge::cond_expect(b.tree, b.x, b.tree.root()), Rational(1));
  auto t = trinomial_xy();
  EXPECT_EQ(qhedge::cond_expect(t.tree, t.x, t.tree.root()), Rational(2, 3));
}

TEST(CondExpect, MissingChildValue) {
  auto b = binomial_x();
  AdaptedProcess<Rational> partial(3);
  partial.set(b.tree.find("H"), Rational(1));
  EXPECT_THROW(qhedge::cond_expect(b.tree, partial, b.tree.root()), qhedge::MissingValue);
}

TEST(CondExpect, RejectedAtLeaf) {
  auto b = binomial_x();
  EXPECT_THROW(qhedge::cond_expect(b.tree, b.x, b.tree.find("H")), qhedge::InputError);
}

TEST(CondCov, ConstantIsUncorrelated) {
  auto t = trinomial_xy();
  const auto c = AdaptedProcess<Rational>::constant(t.tree, Rational(3));
  EXPECT_EQ(qhedge::cond_cov(t.tree, c, t.y, t.tree.root()), Rational(0));
  const auto one = AdaptedProcess<Rational>::constant(t.tree, Rational(1));
  EXPECT_EQ(qhedge::cond_cov(t.tree, t.x, one, t.tree.root()), Rational(0));
}

TEST(CondCov, HandValues) {
  auto b = binomial_x();
  EXPECT_EQ(qhedge::cond_var(b.tree, b.x, b.tree.root()), Rational(9));
  auto t = trinomial_xy();
  EXPECT_EQ(qhedge::cond_cov(t.tree, t.x, t.y, t.tree.root()), Rational(16, 3));
}

TEST(CondCov, SymmetricBilinearNonnegativeVariance) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = qhtest::random_trinomial(rng, 2);
    AdaptedProcess<double> x(m.tree.size()), y(m.tree.size()), z(m.tree.size());
    for (qhedge::NodeIndex v = 0; v < m.tree.size(); ++v) {
      x.set(v, dist(rng));
      y.set(v, dist(rng));
      z.set(v, dist(rng));
    }
    const double a = dist(rng);
    for (int t = 0; t < m.tree.horizon(); ++t) {
      for (auto v : m.tree.level(t)) {
        EXPECT_NEAR(qhedge::cond_cov(m.tree, x, y, v), qhedge::cond_cov(m.tree, y, x, v), 1e-12);
        AdaptedProcess<double> ax_plus_z(m.tree.size());
        for (auto c : m.tree.node(v).children) ax_plus_z.set(c, a * x.at(c) + z.at(c));
        EXPECT_NEAR(qhedge::cond_cov(m.tree, ax_plus_z, y, v),
                    a * qhedge::cond_cov(m.tree, x, y, v) + qhedge::cond_cov(m.tree, z, y, v),
                    1e-10);
        EXPECT_GE(qhedge::cond_var(m.tree, x, v), 0.0);
      }
    }
  }
}

TEST(Expectation, ConstantAndSingleAtom) {
  const auto m = qhtest::sample_binomial_exact();
  const auto c = AdaptedProcess<Rational>::constant(m.tree, Rational(5, 3));
  EXPECT_EQ(qhedge::expectation(m.tree, c, 3), Rational(5, 3));
  EXPECT_EQ(qhedge::expectation(m.tree, c, 0), Rational(5, 3));

  // 2-step symmetric binomial, mass on one leaf
  const auto m2 = qhedge::gen_binomial<Rational>(4, 2, Rational(1, 2), Rational(1, 2), 2, 0);
  AdaptedProcess<Rational> x(m2.tree.size());
  for (auto v : m2.tree.leaves()) x.set(v, Rational(0));
  x.set(m2.tree.find("HH"), Rational(1));
  EXPECT_EQ(qhedge::expectation(m2.tree, x, 2), Rational(1, 4));
}

TEST(Expectation, TowerProperty) {
  const auto m = qhtest::sample_binomial_exact();
  AdaptedProcess<Rational> x(m.tree.size());
  int k = 0;
  for (auto v : m.tree.leaves()) x.set(v, Rational(7 * ++k - 20, 3));
  const auto ext = qhedge::martingale_extend(m.tree, x);
  const Rational terminal = qhedge::expectation(m.tree, ext, m.tree.horizon());
  for (int t = 0; t <= m.tree.horizon(); ++t)
    EXPECT_EQ(qhedge::expectation(m.tree, ext, t), terminal);
}

TEST(MartingaleExtend, ZeroAndFixedPoint) {
  const auto m = qhtest::sample_binomial_exact();
  AdaptedProcess<Rational> zero(m.tree.size());
  for (auto v : m.tree.leaves()) zero.set(v, Rational(0));
  const auto ext = qhedge::martingale_extend(m.tree, zero);
  for (qhedge::NodeIndex v = 0; v < m.tree.size(); ++v) EXPECT_EQ(ext.at(v), Rational(0));

  // driftless stock: extending S_N recovers S everywhere
  const auto drift_free = qhedge::gen_binomial<Rational>(4, 2, Rational(1, 2), Rational(1, 3), 3, 0);
  const auto s_ext = qhedge::martingale_extend(drift_free.tree, drift_free.stock);
  for (qhedge::NodeIndex v = 0; v < drift_free.tree.size(); ++v)
    EXPECT_EQ(s_ext.at(v), drift_free.stock.at(v));
}

TEST(MartingaleExtend, IsMartingale) {
  std::mt19937 rng(3);
  const auto m = qhtest::random_trinomial(rng);
  auto claim = qhtest::random_claim(m, rng);
  const auto ext = qhedge::martingale_extend(m.tree, claim.terminal);
  for (int t = 0; t < m.tree.horizon(); ++t)
    for (auto v : m.tree.level(t))
      EXPECT_NEAR(qhedge::cond_expect(m.tree, ext, v), ext.at(v), 1e-12);
}
