#include <gtest/gtest.h>

#include "qrx/error.hpp"
#include "support.hpp"

using namespace qrx;

namespace {

int hurwitz_sum(const std::vector<CriticalDatum>& crit) {
  int s = 0;
  for (auto& c : crit) s += c.local_degree - 1;
  return s;
}

bool has(const std::vector<CriticalDatum>& crit, const SpherePoint& z, int d) {
  for (auto& c : crit)
    if (c.c.same_as(z, 1e-9) && c.local_degree == d) return true;
  return false;
}

}  // namespace

TEST(CriticalPoints, PowerMap) {
  for (int d = 2; d <= 5; ++d) {
    std::vector<cplx> num(d + 1, 0.0);
    num[d] = 1.0;
    auto crit = find_critical_points(RationalFunction(num, {1.0}));
    ASSERT_EQ(crit.size(), 2u) << d;
    EXPECT_TRUE(has(crit, 0.0, d));
    EXPECT_TRUE(has(crit, SpherePoint::infinity(), d));
  }
}

TEST(CriticalPoints, MobiusHasNone) {
  EXPECT_TRUE(find_critical_points(RationalFunction({1.0, 2.0}, {3.0, -1.0})).empty());
}

TEST(CriticalPoints, ChainMap) {
  auto crit = find_critical_points(test::chain_map());
  ASSERT_EQ(crit.size(), 2u);
  EXPECT_TRUE(has(crit, 0.0, 2));
  EXPECT_TRUE(has(crit, SpherePoint::infinity(), 2));
}

TEST(CriticalPoints, LattesMap) {
  auto crit = find_critical_points(test::lattes_map());
  EXPECT_EQ(crit.size(), 6u);
  for (cplx c : {cplx(1 + M_SQRT2), cplx(1 - M_SQRT2), cplx(-1 + M_SQRT2), cplx(-1 - M_SQRT2),
                 cplx(0, 1), cplx(0, -1)})
    EXPECT_TRUE(has(crit, c, 2)) << c;
}

TEST(CriticalPoints, RiemannHurwitzOnRandomMaps) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    int dn = 1 + trial % 4, dd = trial % 3;
    std::vector<cplx> num(dn + 1), den(dd + 1);
    for (auto& c : num) c = cplx(g(rng), g(rng));
    for (auto& c : den) c = cplx(g(rng), g(rng));
    RationalFunction f(num, den);
    EXPECT_EQ(hurwitz_sum(find_critical_points(f)), 2 * f.degree() - 2) << trial;
  }
}

TEST(Classify, ChainMap) {
  auto f = test::chain_map();
  auto s = classify_postcritical(f, find_critical_points(f));
  EXPECT_TRUE(s.expanding);
  EXPECT_EQ(s.tag, CaseTag::chain);
  EXPECT_EQ(s.describe(), "0→∞→1→−1 (fixed, |λ|=4)");
  ASSERT_EQ(s.cycles.size(), 1u);
  EXPECT_NEAR(std::abs(s.cycles[0].multiplier - cplx(-4.0)), 0.0, 1e-9);
}

TEST(Classify, PeriodicCriticalPointIsNotExpanding) {
  RationalFunction sq({0.0, 0.0, 1.0}, {1.0});
  EXPECT_FALSE(classify_postcritical(sq, find_critical_points(sq)).expanding);
  // 0 -> -1 -> 0
  RationalFunction basilica({-1.0, 0.0, 1.0}, {1.0});
  EXPECT_FALSE(classify_postcritical(basilica, find_critical_points(basilica)).expanding);
}

TEST(Classify, LattesMap) {
  auto f = test::lattes_map();
  auto s = classify_postcritical(f, find_critical_points(f));
  EXPECT_TRUE(s.expanding);
  ASSERT_EQ(s.cycles.size(), 1u);
  EXPECT_TRUE(s.nodes[s.cycles[0].nodes[0]].z.is_infinity());
  for (auto& n : s.nodes) {
    if (!n.postcritical) continue;
    bool in_set = n.z.is_infinity();
    for (cplx p : {cplx(0.0), cplx(1.0), cplx(-1.0)}) in_set = in_set || n.z.same_as(p, 1e-9);
    EXPECT_TRUE(in_set) << format_point(n.z);
  }
}

TEST(Classify, StableUnderToleranceChange) {
  for (auto f : {test::chain_map(), test::lattes_map()}) {
    auto crit = find_critical_points(f);
    auto a = classify_postcritical(f, crit, 1e-9);
    auto b = classify_postcritical(f, crit, 1e-9 + 1e-10);
    auto c = classify_postcritical(f, crit, 1e-9);
    EXPECT_EQ(a.describe(), b.describe());
    EXPECT_EQ(a.describe(), c.describe());
    EXPECT_EQ(a.nodes.size(), b.nodes.size());
  }
}

TEST(Classify, NonFiniteOrbitIsAClassificationError) {
  // parabolic: the orbit of 0 creeps towards 1/2 like 1/k and never closes
  RationalFunction f({0.25, 0.0, 1.0}, {1.0});
  try {
    classify_postcritical(f, find_critical_points(f));
    FAIL() << "expected a classification error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::classification);
  }
}

TEST(Multiplier, Examples) {
  EXPECT_NEAR(std::abs(multiplier(RationalFunction({0.0, 2.0}, {1.0}), 0.0) - 2.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(multiplier(test::chain_map(), -1.0) - cplx(-4.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(multiplier(test::lattes_map(), SpherePoint::infinity()) - 4.0), 0.0, 1e-12);
}

TEST(Multiplier, AgreesWithFiniteDifferences) {
  const double h = 1e-5;
  auto f = test::chain_map();
  cplx p(-1.0);
  cplx fd = (f(p + h).value() - f(p - h).value()) / (2.0 * h);
  EXPECT_LT(std::abs(fd - multiplier(f, p)) / 4.0, 1e-6);
  // chart w = 1/z at infinity
  auto g = test::lattes_map();
  auto conj = [&](cplx w) { return g(SpherePoint::homogeneous(1.0, w)).reciprocal(); };
  cplx fd_inf = (conj(h) - conj(-h)) / (2.0 * h);
  EXPECT_LT(std::abs(fd_inf - multiplier(g, SpherePoint::infinity())) / 4.0, 1e-6);
}

TEST(Multiplier, RejectsNonFixedPoint) {
  EXPECT_THROW(multiplier(test::chain_map(), 1.0), Error);
}
