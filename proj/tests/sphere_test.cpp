#include <gtest/gtest.h>

#include "qrx/error.hpp"
#include "qrx/winding.hpp"
#include "support.hpp"

using namespace qrx;
using qrx::test::rel_err;

namespace {

// f o g as a rational function, from the homogeneous forms of f.
RationalFunction compose(const RationalFunction& f, const RationalFunction& g) {
  const int d = f.degree();
  const int e = g.degree();
  Poly P = g.numerator(), Q = g.denominator();
  P.coeffs().resize(e + 1);
  Q.coeffs().resize(e + 1);
  auto form = [&](const Poly& coeffs) {
    Poly acc({0.0});
    for (int k = 0; k <= d; ++k) {
      Poly term({coeffs[k]});
      for (int i = 0; i < k; ++i) term = term * P;
      for (int i = k; i < d; ++i) term = term * Q;
      acc = acc + term;
    }
    return acc.coeffs();
  };
  return RationalFunction(form(f.numerator()), form(f.denominator()));
}

RationalFunction random_quadratic(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  auto c = [&] { return cplx(g(rng), g(rng)); };
  return RationalFunction({c(), c(), c()}, {c(), c(), c()});
}

}  // namespace

TEST(SphDist, Examples) {
  SpherePoint z(cplx(0.3, -0.7));
  EXPECT_EQ(sph_dist(z, z), 0.0);
  EXPECT_NEAR(sph_dist(0.0, SpherePoint::infinity()), M_PI, 1e-15);
  // integral of 2/(1+t^2) over [0, 1]
  EXPECT_NEAR(sph_dist(0.0, 1.0), M_PI / 2, 1e-15);
}

TEST(SphDist, IsAMetric) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto a = test::random_point(rng), b = test::random_point(rng), c = test::random_point(rng);
    double ab = sph_dist(a, b), bc = sph_dist(b, c), ac = sph_dist(a, c);
    EXPECT_NEAR(ab, sph_dist(b, a), 1e-15);
    EXPECT_LE(ac, ab + bc + 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, M_PI + 1e-15);
  }
}

TEST(RationalEval, ChainMapOrbit) {
  auto f = test::chain_map();
  EXPECT_TRUE(f(0.0).is_infinity());
  EXPECT_TRUE(f(SpherePoint::infinity()).same_as(1.0));
  EXPECT_TRUE(f(1.0).same_as(-1.0));
  EXPECT_EQ(f.degree(), 2);
}

TEST(RationalFunction, RejectsCommonRoot) {
  // (z - 1)(z + 2) / ((z - 1) z)
  EXPECT_THROW(RationalFunction({-2.0, 1.0, 1.0}, {0.0, -1.0, 1.0}), Error);
}

TEST(SphDerivative, Examples) {
  EXPECT_NEAR(sph_derivative(RationalFunction::identity(), cplx(0.4, 2.0)), 1.0, 1e-15);
  EXPECT_NEAR(sph_derivative(RationalFunction::identity(), SpherePoint::infinity()), 1.0, 1e-15);
  RationalFunction sq({0.0, 0.0, 1.0}, {1.0});
  EXPECT_NEAR(sph_derivative(sq, 1.0), 2.0, 1e-15);
  EXPECT_NEAR(sph_derivative(test::chain_map(), -1.0), 4.0, 1e-14);
  // both critical points of the chain map
  EXPECT_NEAR(sph_derivative(test::chain_map(), 0.0), 0.0, 1e-15);
  EXPECT_NEAR(sph_derivative(test::chain_map(), SpherePoint::infinity()), 0.0, 1e-15);
}

TEST(SphDerivative, ChainRule) {
  std::mt19937_64 rng(2);
  for (int pair = 0; pair < 10; ++pair) {
    auto f = random_quadratic(rng), g = random_quadratic(rng);
    auto fg = compose(f, g);
    for (int i = 0; i < 100; ++i) {
      auto z = test::random_point(rng);
      double lhs = fg.sph_derivative(z);
      double rhs = f.sph_derivative(g(z)) * g.sph_derivative(z);
      EXPECT_LT(rel_err(lhs, rhs), 1e-8) << "pair " << pair << " point " << i;
    }
  }
}

TEST(SphDerivative, ContinuousThroughInfinity) {
  auto f = test::lattes_map();
  double at = f.sph_derivative(SpherePoint::infinity());
  double near = f.sph_derivative(cplx(1e7, 3e6));
  EXPECT_NEAR(near, at, 1e-5 * at);
}

TEST(JacobianNorms, WindingExamples) {
  PointMap h2 = [](const Eigen::VectorXd& x) {
    cplx w = winding_eval(2, cplx(x[0], x[1]));
    return Eigen::Vector2d(w.real(), w.imag()).eval();
  };
  auto inner = jacobian_norms(h2, Eigen::Vector2d(0.5, 0.0));
  EXPECT_NEAR(inner.max_expansion, 2.0, 1e-6);
  EXPECT_NEAR(inner.min_expansion, 1.0, 1e-6);
  auto outer = jacobian_norms(h2, Eigen::Vector2d(2.0, 0.0));
  EXPECT_NEAR(outer.max_expansion, 4.0, 1e-6);
  EXPECT_NEAR(outer.min_expansion, 4.0, 1e-6);
  PointMap id = [](const Eigen::VectorXd& x) { return x; };
  auto one = jacobian_norms(id, Eigen::Vector3d(0.2, -1.0, 3.0));
  EXPECT_NEAR(one.max_expansion, 1.0, 1e-9);
  EXPECT_NEAR(one.min_expansion, 1.0, 1e-9);
}

TEST(JacobianNorms, HolomorphicMapsAreConformal) {
  auto f = test::lattes_map();
  PointMap planar = [&](const Eigen::VectorXd& x) {
    cplx w = f(cplx(x[0], x[1])).value();
    return Eigen::Vector2d(w.real(), w.imag()).eval();
  };
  std::mt19937_64 rng(3);
  int tested = 0;
  while (tested < 200) {
    cplx z = test::random_disk(rng, 3.0);
    // stay clear of poles and critical points
    bool clear = std::abs(z) > 0.2 && std::abs(z - 1.0) > 0.2 && std::abs(z + 1.0) > 0.2;
    for (cplx c : {cplx(1 + M_SQRT2), cplx(1 - M_SQRT2), cplx(-1 + M_SQRT2), cplx(-1 - M_SQRT2),
                   cplx(0, 1), cplx(0, -1)})
      clear = clear && std::abs(z - c) > 0.2;
    if (!clear) continue;
    auto n = jacobian_norms(planar, Eigen::Vector2d(z.real(), z.imag()));
    EXPECT_LT((n.max_expansion - n.min_expansion) / n.max_expansion, 1e-4) << z;
    ++tested;
  }
}

TEST(RadialProductMetric, Examples) {
  ExtensionPoint p(cplx(0.2, 0.1), 0.7);
  EXPECT_EQ(radial_product_metric(p, p), 0.0);
  EXPECT_NEAR(radial_product_metric(ExtensionPoint(0.3, 0.5), ExtensionPoint(0.3, 0.6)), 0.1, 1e-15);
  EXPECT_NEAR(radial_product_metric(ExtensionPoint(0.0, 1.0), ExtensionPoint(1.0, 1.0)), M_PI / 2,
              1e-15);
}

TEST(RadialProductMetric, ComparableToEuclidean) {
  const double C = 4.0;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> radius(0.5, 1.0);
  double lo = 1e9, hi = 0.0;
  for (int i = 0; i < 10000;) {
    // q within the hemisphere centred at p
    ExtensionPoint p(test::random_point(rng), radius(rng));
    ExtensionPoint q(test::random_point(rng), radius(rng));
    if (sph_dist(p.z(), q.z()) > M_PI / 2) continue;
    ++i;
    double ratio = radial_product_metric(p, q) / cartesian_distance(p, q);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  EXPECT_GE(lo, 1.0 / C);
  EXPECT_LE(hi, C);
}

TEST(ExtensionPoint, DepthIsKeptExactly) {
  auto p = ExtensionPoint::from_depth(cplx(0.5), 1e-17);
  EXPECT_EQ(p.depth(), 1e-17);
  EXPECT_EQ(p.r(), 1.0);
  auto q = ExtensionPoint::from_depth(cplx(0.5), 3e-17);
  EXPECT_NEAR(cartesian_distance(p, q), 2e-17, 1e-30);
}
