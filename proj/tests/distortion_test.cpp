#include <gtest/gtest.h>

#include "qrx/error.hpp"
#include "qrx/winding.hpp"
#include "support.hpp"

using namespace qrx;

namespace {

PointMap planar(std::function<cplx(cplx)> g) {
  return [g](const Eigen::VectorXd& x) {
    cplx w = g(cplx(x[0], x[1]));
    return Eigen::Vector2d(w.real(), w.imag()).eval();
  };
}

cplx mobius_a(cplx z) { return (2.0 * z + cplx(0.0, 1.0)) / (0.5 * z + 3.0); }
cplx mobius_b(cplx z) { return (z - 0.2) / (cplx(0.1, 0.3) * z + 1.0); }

double K_at(const PointMap& f, cplx z, int directions = 64) {
  DistortionSettings s;
  s.directions = directions;
  return estimate_distortion(f, Eigen::Vector2d(z.real(), z.imag()), s).K;
}

}  // namespace

TEST(Schedule, RadiiAndDirections) {
  auto eps = epsilon_schedule(DistortionSettings{});
  ASSERT_EQ(eps.size(), 7u);
  EXPECT_EQ(eps.front(), 1e-2);
  for (std::size_t i = 1; i < eps.size(); ++i) EXPECT_DOUBLE_EQ(eps[i], 0.5 * eps[i - 1]);
  EXPECT_GE(eps.back(), 1e-4);
  DistortionSettings bad;
  bad.ratio = 1.5;
  EXPECT_THROW(epsilon_schedule(bad), Error);
  auto dirs = fibonacci_directions(64);
  ASSERT_EQ(dirs.size(), 64u);
  Vec3 sum = Vec3::Zero();
  for (auto& v : dirs) {
    EXPECT_NEAR(v.norm(), 1.0, 1e-15);
    sum += v;
  }
  EXPECT_LT(sum.norm(), 1.0);
}

TEST(EstimateDistortion, Examples) {
  EXPECT_NEAR(K_at(planar(mobius_a), cplx(0.3, -0.2)), 1.0, 1e-3);
  // 64 directions miss the principal axes by up to pi/64, which costs about
  // 1% for d = 3 at a generic angle; on the real axis both axes are sampled
  EXPECT_NEAR(K_at(planar([](cplx z) { return winding_eval(2, z); }), cplx(0.4, 0.3)), 2.0, 1e-2);
  EXPECT_NEAR(K_at(planar([](cplx z) { return winding_eval(3, z); }), cplx(0.5, 0.0)), 3.0, 1e-2);
  EXPECT_NEAR(K_at(planar([](cplx z) { return winding_eval(3, z); }), cplx(0.4, 0.3), 512), 3.0, 1e-3);
  PointMap diag = [](const Eigen::VectorXd& x) { return Eigen::Vector3d(2 * x[0], x[1], x[2]).eval(); };
  auto r = estimate_distortion(diag, Eigen::Vector3d(0.1, 0.2, 0.3));
  EXPECT_NEAR(r.K, 2.0, 1e-2);
  EXPECT_LE(r.K, 2.0 + 1e-12);
  EXPECT_GE(r.K, 1.0);
}

TEST(EstimateDistortion, MobiusInvariance) {
  auto h = [](cplx z) { return winding_eval(2, z); };
  std::mt19937_64 rng(50);
  for (int i = 0; i < 20; ++i) {
    cplx z = test::random_disk(rng, 0.6);
    if (std::abs(z) < 0.1) continue;
    // the inner Moebius map rotates the principal directions against the
    // sampled ones, so the direction set has to be fine enough for 1e-3
    double base = K_at(planar(h), mobius_b(z), 256);
    double conj = K_at(planar([&](cplx w) { return mobius_a(h(mobius_b(w))); }), z, 256);
    EXPECT_NEAR(conj / base, 1.0, 1e-3) << z;
  }
}

TEST(EstimateDistortion, CompositionIsSubmultiplicative) {
  auto g = [](cplx z) { return winding_eval(2, z); };
  auto shear = [](cplx z) { return cplx(z.real() + 0.5 * z.imag(), z.imag()); };
  std::mt19937_64 rng(51);
  for (int i = 0; i < 20; ++i) {
    cplx z = test::random_disk(rng, 0.4);
    if (std::abs(z) < 0.1) continue;
    double kg = K_at(planar(g), shear(z));
    double ks = K_at(planar(shear), z);
    double kc = K_at(planar([&](cplx w) { return g(shear(w)); }), z);
    EXPECT_LE(kc, 1.05 * kg * ks) << z;
  }
}

TEST(EstimateDistortion, UnavailableProbesAreSkipped) {
  auto pd = distortion_from_distances(
      [](int dir, std::size_t i) { return i == 2 && dir == 3 ? std::nan("") : (dir == 0 ? 1.5 : 1.0); },
      {1e-2, 5e-3, 2.5e-3}, 8, 3);
  EXPECT_TRUE(std::isnan(pd.ratio[2]));
  EXPECT_NEAR(pd.K, 1.5, 1e-12);
  EXPECT_THROW(distortion_from_distances([](int, std::size_t) { return std::nan(""); }, {1e-2}, 4, 3),
               Error);
}

TEST(FittedSlope, LinearData) {
  std::vector<double> v;
  for (int n = 0; n < 8; ++n) v.push_back(0.3 * n - 1.0);
  EXPECT_NEAR(fitted_slope(v), 0.3, 1e-14);
  EXPECT_NEAR(fitted_slope({2.0, 2.0, 2.0}), 0.0, 1e-15);
}

TEST(KoebeCheck, IdentityAndShrinkingRatios) {
  auto id = koebe_check(RationalFunction::identity(), cplx(0.3), 0.1, 0.5, 500, 1);
  EXPECT_NEAR(id.c1, 1.0, 1e-9);
  EXPECT_NEAR(id.c2, 1.0, 1e-9);
  auto f = test::chain_map();
  SpherePoint z0(2.0);
  double R = 0.4;
  std::vector<KoebeCheck> fits;
  for (double q : {0.5, 0.25, 0.125}) fits.push_back(koebe_check(f, z0, q * R, R, 2000, 2));
  for (std::size_t i = 1; i < fits.size(); ++i) {
    EXPECT_LT(fits[i].c2, fits[i - 1].c2);
    EXPECT_LT(fits[i].sharp_ratio, fits[i - 1].sharp_ratio);
  }
  for (auto& k : fits) {
    EXPECT_LE(k.c1, 1.0);
    EXPECT_GE(k.c2, 1.0);
    EXPECT_GE(k.sharp_ratio, 1.0);
  }
}

TEST(KoebeCheck, RejectsNonInjectiveBalls) {
  // the ball around the critical point 0 of the chain map is folded 2 to 1
  EXPECT_THROW(koebe_check(test::chain_map(), cplx(1e-3), 0.05, 0.3), Error);
}

TEST(ControlMaps, MobiusIsFlatAndTheRadialControlGrows) {
  UniformKSettings s;
  s.samples = 30;
  s.n_max = 6;
  auto shell = shell_samples(s.samples, 1e-9, 3);
  RationalFunction g({0.0, cplx(1.2 * std::cos(1.0), 1.2 * std::sin(1.0))}, {1.0});
  auto flat = uniform_K_report(mobius_step(g), shell, s);
  EXPECT_LT(std::abs(flat.slope), 0.01);
  EXPECT_NEAR(flat.max_K, 1.0, 0.05);
  auto control = uniform_K_report(radial_control_step(test::chain_map()), shell, s);
  EXPECT_GT(control.slope, 0.3);
  EXPECT_FALSE(control.pass);
  // K of the n-th iterate is 2^n along regular orbits
  EXPECT_NEAR(control.K[0], 2.0, 0.05);
}

TEST(UniformK, SmallLattesRun) {
  UniformKSettings s;
  s.samples = 12;
  s.n_max = 4;
  auto rep = uniform_K_report(*test::built("lattes").domain, s);
  ASSERT_EQ(rep.K.size(), 4u);
  for (double k : rep.K) {
    EXPECT_GE(k, 1.0);
    EXPECT_TRUE(std::isfinite(k));
  }
  EXPECT_EQ(rep.samples.size(), 12u);
}
