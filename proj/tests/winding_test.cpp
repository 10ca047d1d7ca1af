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

}  // namespace

TEST(Winding, Examples) {
  EXPECT_NEAR(std::abs(winding_eval(2, std::polar(0.5, M_PI / 4)) - cplx(0.0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(winding_eval(2, 2.0) - 4.0), 0.0, 1e-15);
  EXPECT_EQ(winding_eval(3, 0.0), cplx(0.0));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int i = 0; i < 1000; ++i) {
    cplx z = std::polar(1.0, angle(rng));
    EXPECT_NEAR(std::abs(winding_eval(3, z) - z * z * z), 0.0, 1e-14);
  }
}

TEST(Winding, ContinuousAcrossUnitCircle) {
  for (double theta : {0.3, 1.7, -2.9}) {
    double prev = 0.0;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      double jump = std::abs(winding_eval(4, std::polar(1 - eps, theta)) -
                             winding_eval(4, std::polar(1 + eps, theta)));
      EXPECT_LT(jump, 10.0 * eps);
      if (prev > 0.0) {
        EXPECT_NEAR(jump / prev, 0.1, 0.01);
      }
      prev = jump;
    }
  }
}

TEST(WindingScaled, Examples) {
  const cplx lambda(-4.0);
  const int d = 2, n = 3;
  double rho = std::pow(4.0, -double(n) / d);
  for (double theta : {0.0, 0.4, 2.5}) {
    cplx z = std::polar(rho, theta);
    EXPECT_NEAR(std::abs(winding_scaled(d, lambda, n, z) - std::pow(4.0, -n) * std::polar(1.0, d * theta)),
                0.0, 1e-15);
    EXPECT_NEAR(std::abs(winding_scaled(d, lambda, n, z) - z * z), 0.0, 1e-15);
  }
  EXPECT_EQ(winding_scaled(d, lambda, n, 0.0), cplx(0.0));
  cplx z(0.3, -0.4);
  EXPECT_EQ(winding_scaled(3, lambda, 0, z), winding_eval(3, z));
  EXPECT_THROW(winding_scaled(d, lambda, n, 1.01 * rho), Error);
}

TEST(WindingNorms, ClosedForm) {
  auto n0 = winding_norms(3, cplx(4.0), 0, cplx(0.2, 0.1));
  EXPECT_EQ(n0.max_expansion, 3.0);
  EXPECT_EQ(n0.min_expansion, 1.0);
  auto id = winding_norms(1, cplx(4.0), 5, cplx(1e-4));
  EXPECT_NEAR(id.max_expansion, 1.0, 1e-15);
  EXPECT_NEAR(id.min_expansion, 1.0, 1e-15);
  auto n2 = winding_norms(2, cplx(-4.0), 2, cplx(0.1));
  EXPECT_NEAR(n2.max_expansion, 2.0 * std::pow(4.0, -1.0), 1e-15);
  EXPECT_NEAR(n2.min_expansion, std::pow(4.0, -1.0), 1e-15);
}

TEST(WindingNorms, MatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int d : {2, 3, 4}) {
    for (int n : {0, 1, 3}) {
      cplx lambda(0.0, 4.0);
      double rho = std::pow(4.0, -double(n) / d);
      auto map = planar([&](cplx z) { return winding_scaled(d, lambda, n, z); });
      for (int i = 0; i < 300; ++i) {
        cplx z = test::random_disk(rng, 0.95 * rho);
        if (std::abs(z) < 0.05 * rho) continue;
        auto fd = jacobian_norms(map, Eigen::Vector2d(z.real(), z.imag()), 1e-6 * rho);
        auto cf = winding_norms(d, lambda, n, z);
        EXPECT_LT(test::rel_err(fd.max_expansion, cf.max_expansion), 1e-4);
        EXPECT_LT(test::rel_err(fd.min_expansion, cf.min_expansion), 1e-4);
      }
    }
  }
}

TEST(WindingNorms, DistortionIsDInsideAndOneOutside) {
  auto map = planar([](cplx z) { return winding_eval(3, z); });
  for (cplx z : {cplx(0.5, 0.2), cplx(-0.1, -0.6)}) {
    auto fd = jacobian_norms(map, Eigen::Vector2d(z.real(), z.imag()));
    EXPECT_NEAR(fd.max_expansion / fd.min_expansion, 3.0, 1e-6);
  }
  for (cplx z : {cplx(1.5, 0.2), cplx(-0.1, -2.6)}) {
    auto fd = jacobian_norms(map, Eigen::Vector2d(z.real(), z.imag()));
    EXPECT_NEAR(fd.max_expansion / fd.min_expansion, 1.0, 1e-6);
  }
}

TEST(Sector, BoundsHoldOnRandomPairs) {
  for (int d : {2, 3, 4}) {
    auto r = sector_bounds_check(d, Sector{0.3, M_PI / d, 1.0}, 10000, 8);
    EXPECT_EQ(r.pairs, 10000u);
    EXPECT_EQ(r.violations, 0u) << d;
  }
}

TEST(Sector, DegenerateAndRadialPairs) {
  cplx z(0.3, 0.2);
  auto same = sector_bounds_check(2, {{z, z}});
  EXPECT_EQ(same.violations, 0u);
  EXPECT_EQ(same.worst_lower, 0.0);
  // common ray: radial isometry
  cplx a = std::polar(0.2, 0.5), b = std::polar(0.7, 0.5);
  EXPECT_NEAR(std::abs(winding_eval(2, a) - winding_eval(2, b)), std::abs(a - b), 1e-15);
  EXPECT_EQ(sector_bounds_check(2, {{a, b}}).violations, 0u);
}

TEST(Sector, InjectiveOnSectorOfAnglePiOverD) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Sector s{1.0, M_PI / 3, 1.0};
  std::vector<cplx> images;
  for (int i = 0; i < 10000; ++i) images.push_back(winding_eval(3, s.sample(u(rng), u(rng))));
  std::sort(images.begin(), images.end(),
            [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  for (std::size_t i = 1; i < images.size(); ++i) EXPECT_NE(images[i], images[i - 1]);
}
