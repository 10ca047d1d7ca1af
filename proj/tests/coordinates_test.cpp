#include <gtest/gtest.h>

#include "support.hpp"

using namespace qrx;

namespace {

const ChartAtlas& chain_atlas() { return test::built("one_minus_two_over_zsq").family->atlas(); }
const ChartAtlas& lattes_atlas() { return test::built("lattes").family->atlas(); }

int node_at(const ChartAtlas& atlas, const SpherePoint& z) {
  for (std::size_t i = 0; i < atlas.nodes().size(); ++i)
    if (atlas.node(i).z.same_as(z, 1e-9)) return static_cast<int>(i);
  return -1;
}

// Spherical diameter of U_x^n from points on its boundary curve.
double boundary_diameter(const ChartAtlas& atlas, int x, int n) {
  std::vector<SpherePoint> pts;
  for (int j = 0; j < 64; ++j) pts.push_back(atlas.sample(x, n, 1.0, j / 64.0));
  double d = 0.0;
  for (auto& a : pts)
    for (auto& b : pts) d = std::max(d, sph_dist(a, b));
  return d;
}

}  // namespace

TEST(Koenig, LinearMapIsItsOwnCoordinate) {
  RationalFunction f({0.0, 2.0}, {1.0});
  KoenigChart chart(f, {SpherePoint(0.0)}, 0.5);
  for (cplx z : {cplx(0.1, 0.2), cplx(-0.3, 0.05), cplx(0.0)}) {
    EXPECT_NEAR(std::abs(koenig_forward(chart, z) - z / 0.5), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(koenig_forward(chart, f(z)) - 2.0 * koenig_forward(chart, z)), 0.0, 1e-14);
  }
  cplx w(0.3, -0.6);
  EXPECT_NEAR(std::abs(koenig_inverse(chart, w).value() - 0.5 * w), 0.0, 1e-14);
  auto choice = choose_chart_radius(chart, 2);
  EXPECT_EQ(choice.r0, 0.5);
  EXPECT_EQ(choice.trials, 1);
  // an affine chart still distorts the spherical metric: (1 + |x|^2) / (1 + |y|^2)
  // ranges over [1/1.25, 1.25] on the disk of radius 1/2
  EXPECT_NEAR(choice.fit.k1, 0.8, 1e-9);
  EXPECT_NEAR(choice.fit.k2, 1.25, 1e-9);
}

TEST(Koenig, ChainMapResidual) {
  const auto& atlas = chain_atlas();
  int p = node_at(atlas, -1.0);
  ASSERT_GE(p, 0);
  EXPECT_LT(koenig_residual(atlas, p, 1000, 1).max_residual, 1e-9);
  const auto& chart = atlas.koenig(atlas.node(p).cycle);
  EXPECT_EQ(std::abs(koenig_forward(chart, -1.0)), 0.0);
  EXPECT_TRUE(koenig_inverse(chart, 0.0).same_as(-1.0, 1e-15));
  EXPECT_NEAR(std::abs(chart.multiplier() - cplx(-4.0)), 0.0, 1e-12);
}

TEST(Koenig, RoundTrip) {
  for (const ChartAtlas* atlas : {&chain_atlas(), &lattes_atlas()}) {
    const auto& chart = atlas->koenig(0);
    std::mt19937_64 rng(10);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      cplx w = test::random_disk(rng, 0.9);
      worst = std::max(worst, std::abs(koenig_forward(chart, koenig_inverse(chart, w)) - w));
    }
    EXPECT_LT(worst, 1e-8);
  }
}

TEST(Koenig, ChosenRadiusSatisfiesKoebeConditions) {
  const auto& atlas = chain_atlas();
  const auto& chart = atlas.koenig(0);
  auto fit = koenig_koebe_fit(chart, chart.r0());
  // the critical point 0 reaches -1 through two local degrees of 2
  double grow = std::pow(4.0, 1.0 / 4.0);
  EXPECT_GT(grow, fit.k2);
  EXPECT_GE(fit.k1 * grow, 1.01);
  EXPECT_LT(fit.k2, 2.0);
}

TEST(CriticalChart, DiagramResiduals) {
  for (const ChartAtlas* atlas : {&chain_atlas(), &lattes_atlas()}) {
    for (int c : atlas->critical_nodes()) {
      EXPECT_LT(diagram_residual(*atlas, c, 1000, 11).max_residual, 1e-9) << c;
      EXPECT_EQ(std::abs(critical_phi(*atlas, c, atlas->node(c).z)), 0.0);
    }
  }
}

TEST(CriticalChart, IsLocallyLinearAtTheCriticalPoint) {
  // chi_inf(f(z)) = chi_0(z)^2 with f(z) ~ -2/z^2, so chi_0 ~ a z with a fixed root of unity in a
  const auto& atlas = chain_atlas();
  int c = node_at(atlas, 0.0);
  ASSERT_GE(c, 0);
  cplx a = critical_phi(atlas, c, cplx(1e-6)) / 1e-6;
  cplx b = critical_phi(atlas, c, cplx(0.0, 1e-6)) / cplx(0.0, 1e-6);
  EXPECT_NEAR(std::abs(a - b) / std::abs(a), 0.0, 1e-5);
}

TEST(CriticalChart, InjectiveOnSamples) {
  const auto& atlas = chain_atlas();
  int c = node_at(atlas, 0.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<cplx, cplx>> pts;
  for (int i = 0; i < 500; ++i) {
    auto z = atlas.sample(c, 0, u(rng), u(rng));
    pts.push_back({z.value(), critical_phi(atlas, c, z)});
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (std::abs(pts[i].first - pts[j].first) > 1e-9) {
        EXPECT_GT(std::abs(pts[i].second - pts[j].second), 0.0);
      }
}

TEST(NeighborhoodLevel, Examples) {
  const auto& atlas = chain_atlas();
  int p = node_at(atlas, -1.0);
  auto at_p = neighborhood_level(atlas, -1.0);
  EXPECT_EQ(at_p.owner, p);
  EXPECT_EQ(at_p.level, atlas.settings().n_max);
  auto z = atlas.inverse(p, 1.0001 * atlas.radius(p, 3));
  auto lv = neighborhood_level(atlas, z);
  EXPECT_EQ(lv.owner, p);
  EXPECT_EQ(lv.level, 2);
  // boundary circles are assigned to the inner set
  int c = node_at(atlas, 0.0);
  // radii are constant up to the orbit depth of the node
  for (int n = atlas.node(c).depth; n < 12; ++n) EXPECT_EQ(atlas.level_of(c, atlas.radius(c, n)), n);
  EXPECT_EQ(neighborhood_level(atlas, cplx(0.6, 0.6)).owner, -1);
}

TEST(NeighborhoodLevel, LevelSetsNest) {
  const auto& atlas = lattes_atlas();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t x = 0; x < atlas.nodes().size(); ++x) {
    for (int n = 1; n < 8; ++n) EXPECT_LE(atlas.radius(x, n), atlas.radius(x, n - 1));
    for (int i = 0; i < 150; ++i) {
      auto z = atlas.sample(x, 0, u(rng), u(rng));
      int level = atlas.level_of(x, std::abs(atlas.chart_value(x, z)));
      ASSERT_GE(level, 0);
      for (int k = 0; k <= level; ++k) EXPECT_LE(std::abs(atlas.chart_value(x, z)), atlas.radius(x, k) * (1 + 1e-12));
    }
  }
}

TEST(NeighborhoodLevel, DiameterShrinksLikeInverseMultiplier) {
  const auto& atlas = chain_atlas();
  int p = node_at(atlas, -1.0);
  std::vector<double> logs;
  for (int n = 2; n <= 8; ++n) logs.push_back(std::log(boundary_diameter(atlas, p, n)));
  double slope = fitted_slope(logs);
  EXPECT_NEAR(slope / -std::log(4.0), 1.0, 0.1);
}

TEST(CriticalChart, KoebeComparabilityImprovesWithLevel) {
  const auto& atlas = chain_atlas();
  int c = node_at(atlas, 0.0);
  const auto& chart = atlas.node(c).chart;
  double at_c = atlas.chart_sharp(c, chart.to_local(0.0));
  std::vector<double> L;
  for (int n = atlas.node(c).depth; n <= atlas.node(c).depth + 6; n += 2) {
    double worst = 1.0;
    for (int i = 0; i <= 8; ++i)
      for (int j = 0; j < 16; ++j) {
        auto z = atlas.sample(c, n, i / 8.0, j / 16.0);
        double r = atlas.chart_sharp(c, chart.to_local(z)) / at_c;
        worst = std::max({worst, r, 1.0 / r});
      }
    L.push_back(worst);
  }
  for (std::size_t k = 1; k < L.size(); ++k) EXPECT_LT(L[k], L[k - 1]);
  EXPECT_LT(L.back() - 1.0, 0.25 * (L.front() - 1.0));
}
