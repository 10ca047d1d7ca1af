#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "qrx/jet.hpp"
#include "qrx/poly.hpp"

namespace qrx {

using Vec3 = Eigen::Vector3d;

// Point of the Riemann sphere in homogeneous coordinates (a:b), normalized
// so that max(|a|, |b|) = 1. Infinity is b = 0.
class SpherePoint {
 public:
  SpherePoint() = default;
  SpherePoint(cplx z);
  SpherePoint(double x) : SpherePoint(cplx(x)) {}

  static SpherePoint homogeneous(cplx a, cplx b);
  static SpherePoint infinity() { return homogeneous(1.0, 0.0); }
  static SpherePoint from_unit_vector(const Vec3& u);

  cplx a() const { return a_; }
  cplx b() const { return b_; }
  bool is_infinity() const { return b_ == 0.0; }
  bool is_zero() const { return a_ == 0.0; }
  // Throws on infinity.
  cplx value() const;
  // 1/z, throws on zero.
  cplx reciprocal() const;
  Vec3 unit_vector() const;
  bool same_as(const SpherePoint& other, double tol = 1e-12) const;

 private:
  cplx a_{0.0};
  cplx b_{1.0};
};

double sph_dist(const SpherePoint& z, const SpherePoint& w);
// Conformal factor (1 + |z|^2) / 2, the inverse of the spherical density.
double sph_scale(const SpherePoint& z);

class RationalFunction {
 public:
  // Ascending coefficient lists. Throws config errors on a constant map or
  // a numerator and denominator with a common root.
  RationalFunction(std::vector<cplx> numerator, std::vector<cplx> denominator);
  static RationalFunction identity();

  int degree() const { return degree_; }
  const Poly& numerator() const { return p_; }
  const Poly& denominator() const { return q_; }

  SpherePoint operator()(const SpherePoint& z) const;
  // Homogeneous values (P(a,b), Q(a,b)) of the degree-d forms.
  std::pair<cplx, cplx> eval_homogeneous(cplx a, cplx b) const;
  double sph_derivative(const SpherePoint& z) const;
  // Smallest singular value ratio of the Sylvester matrix.
  double resultant_conditioning() const { return resultant_; }

 private:
  Poly p_, q_;
  Poly pr_, qr_;      // reversed forms for |z| > 1
  Poly w_, wr_;       // P'Q - PQ' in z and in 1/z
  int degree_ = 0;
  double resultant_ = 0.0;
};

SpherePoint rational_eval(const RationalFunction& f, const SpherePoint& z);
double sph_derivative(const RationalFunction& f, const SpherePoint& z);

// Affine chart around a point: u = z - x when |x| <= 1, otherwise
// u = 1/z - 1/x (with 1/x = 0 at infinity).
class LocalChart {
 public:
  LocalChart() = default;
  explicit LocalChart(const SpherePoint& center);

  const SpherePoint& center() const { return center_; }
  bool inverted() const { return inverted_; }
  cplx offset() const { return offset_; }

  cplx to_local(const SpherePoint& z) const;
  SpherePoint from_local(cplx u) const;
  // Homogeneous linear forms (X(u), Y(u)) with z = X/Y.
  std::pair<Poly, Poly> homogeneous_forms() const;
  // sigma such that g^#(z) = sigma(u) |dg/du| for a map g to the plane.
  double scale(cplx u) const;

 private:
  SpherePoint center_;
  bool inverted_ = false;
  cplx offset_{0.0};
};

// Local expression u -> loc_y(f(loc_x^{-1}(u))) of f between charts at x
// and y = f(x), as a quotient num/den of polynomials with num vanishing to
// order `order` (the local degree) at 0.
class LocalForm {
 public:
  LocalForm() = default;
  LocalForm(const RationalFunction& f, const SpherePoint& x, const SpherePoint& y);

  const LocalChart& source() const { return source_; }
  const LocalChart& target() const { return target_; }
  int order() const { return order_; }
  // Leading coefficient a with num/den = a u^order + ...
  cplx leading() const { return leading_; }
  const Poly& numerator() const { return num_; }
  const Poly& denominator() const { return den_; }

  template <class T>
  T operator()(const T& u) const { return num_(u) / den_(u); }
  // num(u) / (u^order den(u)), holomorphic and nonzero near 0.
  template <class T>
  T ratio(const T& u) const { return reduced_(u) / den_(u); }

 private:
  LocalChart source_, target_;
  Poly num_, den_, reduced_;
  int order_ = 1;
  cplx leading_{1.0};
};

// Central-difference Jacobian singular values of a map R^k -> R^k.
using PointMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
struct ExpansionPair {
  double max_expansion;
  double min_expansion;
};
ExpansionPair jacobian_norms(const PointMap& map, const Eigen::VectorXd& x, double h = -1.0);

// Point of R^3 in spherical-radial coordinates. The radial part is kept as
// depth = 1 - r, which stays accurate for points very close to the sphere.
class ExtensionPoint {
 public:
  ExtensionPoint() = default;
  ExtensionPoint(const SpherePoint& z, double r);
  static ExtensionPoint from_depth(const SpherePoint& z, double depth);
  static ExtensionPoint from_cartesian(const Vec3& x);

  const SpherePoint& z() const { return z_; }
  double r() const { return 1.0 - depth_; }
  double depth() const { return depth_; }
  Vec3 cartesian() const { return (1.0 - depth_) * z_.unit_vector(); }

 private:
  SpherePoint z_;
  double depth_ = 0.0;
};

// Euclidean distance between two extension points, computed without
// cancellation in the radial parts.
double cartesian_distance(const ExtensionPoint& p, const ExtensionPoint& q);
double radial_product_metric(const ExtensionPoint& p, const ExtensionPoint& q);

}  // namespace qrx
