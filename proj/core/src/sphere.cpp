#include "qrx/sphere.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "qrx/error.hpp"

namespace qrx {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::domain: return "domain";
    case ErrorKind::classification: return "classification";
    case ErrorKind::chart_domain: return "chart-domain";
    case ErrorKind::branch: return "branch-tracking";
    case ErrorKind::window: return "window";
    case ErrorKind::growth: return "growth";
    case ErrorKind::axis_proximity: return "axis-proximity";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + " error: " + what);
}

SpherePoint::SpherePoint(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    fail(ErrorKind::numeric, "non-finite sphere coordinate");
  if (std::abs(z) <= 1.0) {
    a_ = z;
    b_ = 1.0;
  } else {
    a_ = 1.0;
    b_ = 1.0 / z;
  }
}

SpherePoint SpherePoint::homogeneous(cplx a, cplx b) {
  double m = std::max(std::abs(a), std::abs(b));
  if (!(m > 0.0) || !std::isfinite(m))
    fail(ErrorKind::numeric, "indeterminate homogeneous point (0:0)");
  SpherePoint p;
  if (std::abs(a) >= std::abs(b)) {
    p.a_ = 1.0;
    p.b_ = b / a;
  } else {
    p.a_ = a / b;
    p.b_ = 1.0;
  }
  return p;
}

SpherePoint SpherePoint::from_unit_vector(const Vec3& u) {
  if (u.z() <= 0.0) return homogeneous({u.x(), u.y()}, 1.0 - u.z());
  return homogeneous(1.0 + u.z(), {u.x(), -u.y()});
}

cplx SpherePoint::value() const {
  if (is_infinity()) fail(ErrorKind::domain, "finite value requested at infinity");
  return a_ / b_;
}

cplx SpherePoint::reciprocal() const {
  if (is_zero()) fail(ErrorKind::domain, "reciprocal requested at zero");
  return b_ / a_;
}

Vec3 SpherePoint::unit_vector() const {
  double na = std::norm(a_), nb = std::norm(b_);
  cplx ab = a_ * std::conj(b_);
  double s = na + nb;
  return Vec3(2.0 * ab.real() / s, 2.0 * ab.imag() / s, (na - nb) / s);
}

bool SpherePoint::same_as(const SpherePoint& other, double tol) const {
  return sph_dist(*this, other) <= tol;
}

double sph_dist(const SpherePoint& z, const SpherePoint& w) {
  Vec3 u = z.unit_vector(), v = w.unit_vector();
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

double sph_scale(const SpherePoint& z) {
  if (z.is_infinity()) return std::numeric_limits<double>::infinity();
  return 0.5 * (1.0 + std::norm(z.value()));
}

namespace {

Poly pad(const Poly& p, int d) {
  std::vector<cplx> c(d + 1, 0.0);
  for (int k = 0; k <= d; ++k) c[k] = p[k];
  return Poly(c);
}

double sylvester_conditioning(const Poly& p, const Poly& q, int d) {
  double scale = std::max(p.max_abs(), q.max_abs());
  int n = 2 * d;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k <= d; ++k) {
      s(i, i + k) = p[k] / scale;
      s(d + i, i + k) = q[k] / scale;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s);
  auto sv = svd.singularValues();
  return sv(sv.size() - 1) / sv(0);
}

}  // namespace

RationalFunction::RationalFunction(std::vector<cplx> numerator, std::vector<cplx> denominator) {
  Poly p(std::move(numerator)), q(std::move(denominator));
  double scale = std::max(p.max_abs(), q.max_abs());
  if (!(scale > 0.0) || !std::isfinite(scale))
    fail(ErrorKind::config, "rational map needs finite nonzero coefficients");
  if (q.max_abs() == 0.0) fail(ErrorKind::config, "denominator is identically zero");
  auto trim = [scale](const Poly& a) {
    std::vector<cplx> c = a.coeffs();
    for (auto& x : c)
      if (std::abs(x) <= 1e-14 * scale) x = 0.0;
    return Poly(c);
  };
  p = trim(p);
  q = trim(q);
  degree_ = std::max(p.degree(), q.degree());
  if (degree_ < 1) fail(ErrorKind::config, "rational map must have degree at least 1");
  p_ = pad(p, degree_);
  q_ = pad(q, degree_);
  resultant_ = sylvester_conditioning(p_, q_, degree_);
  if (resultant_ < 1e-12)
    fail(ErrorKind::config, "numerator and denominator share a root (resultant too small)");
  pr_ = p_.reversed(degree_);
  qr_ = q_.reversed(degree_);
  w_ = p_.derivative() * q_ - p_ * q_.derivative();
  wr_ = pr_.derivative() * qr_ - pr_ * qr_.derivative();
}

RationalFunction RationalFunction::identity() { return RationalFunction({0.0, 1.0}, {1.0}); }

std::pair<cplx, cplx> RationalFunction::eval_homogeneous(cplx a, cplx b) const {
  if (std::abs(a) <= std::abs(b)) {
    cplx z = a / b;
    return {p_(z), q_(z)};
  }
  cplx w = b / a;
  return {pr_(w), qr_(w)};
}

SpherePoint RationalFunction::operator()(const SpherePoint& z) const {
  auto [P, Q] = eval_homogeneous(z.a(), z.b());
  double m = std::max(std::abs(P), std::abs(Q));
  if (!(m > 1e-300)) fail(ErrorKind::numeric, "indeterminate value (0:0): common-root contamination");
  return SpherePoint::homogeneous(P, Q);
}

double RationalFunction::sph_derivative(const SpherePoint& z) const {
  if (std::abs(z.a()) <= std::abs(z.b())) {
    cplx u = z.a() / z.b();
    cplx P = p_(u), Q = q_(u);
    return (1.0 + std::norm(u)) * std::abs(w_(u)) / (std::norm(P) + std::norm(Q));
  }
  cplx w = z.b() / z.a();
  cplx P = pr_(w), Q = qr_(w);
  return (1.0 + std::norm(w)) * std::abs(wr_(w)) / (std::norm(P) + std::norm(Q));
}

SpherePoint rational_eval(const RationalFunction& f, const SpherePoint& z) { return f(z); }
double sph_derivative(const RationalFunction& f, const SpherePoint& z) {
  return f.sph_derivative(z);
}

LocalChart::LocalChart(const SpherePoint& center) : center_(center) {
  inverted_ = std::abs(center.a()) > std::abs(center.b());
  offset_ = inverted_ ? center.reciprocal() : center.value();
}

cplx LocalChart::to_local(const SpherePoint& z) const {
  if (inverted_) {
    if (z.is_zero()) fail(ErrorKind::domain, "point outside local chart");
    return z.reciprocal() - offset_;
  }
  if (z.is_infinity()) fail(ErrorKind::domain, "point outside local chart");
  return z.value() - offset_;
}

SpherePoint LocalChart::from_local(cplx u) const {
  if (inverted_) return SpherePoint::homogeneous(1.0, offset_ + u);
  return SpherePoint::homogeneous(offset_ + u, 1.0);
}

std::pair<Poly, Poly> LocalChart::homogeneous_forms() const {
  if (inverted_) return {Poly::constant(1.0), Poly::linear(offset_, 1.0)};
  return {Poly::linear(offset_, 1.0), Poly::constant(1.0)};
}

double LocalChart::scale(cplx u) const { return 0.5 * (1.0 + std::norm(offset_ + u)); }

LocalForm::LocalForm(const RationalFunction& f, const SpherePoint& x, const SpherePoint& y)
    : source_(x), target_(y) {
  auto [X, Y] = source_.homogeneous_forms();
  int d = f.degree();
  std::vector<Poly> xp(d + 1), yp(d + 1);
  xp[0] = yp[0] = Poly::constant(1.0);
  for (int k = 1; k <= d; ++k) {
    xp[k] = xp[k - 1] * X;
    yp[k] = yp[k - 1] * Y;
  }
  Poly P = Poly::constant(0.0), Q = Poly::constant(0.0);
  for (int k = 0; k <= d; ++k) {
    P = P + f.numerator()[k] * (xp[k] * yp[d - k]);
    Q = Q + f.denominator()[k] * (xp[k] * yp[d - k]);
  }
  cplx eta = target_.offset();
  if (target_.inverted()) {
    num_ = Q - eta * P;
    den_ = P;
  } else {
    num_ = P - eta * Q;
    den_ = Q;
  }
  double scale = std::max(num_.max_abs(), den_.max_abs());
  if (std::abs(den_[0]) <= 1e-10 * scale)
    fail(ErrorKind::numeric, "local form: target is not the image of the source point");
  order_ = 0;
  auto& c = num_.coeffs();
  while (order_ < static_cast<int>(c.size()) && std::abs(c[order_]) <= 1e-8 * scale) {
    c[order_] = 0.0;
    ++order_;
  }
  if (order_ == 0)
    fail(ErrorKind::numeric, "local form: target is not the image of the source point");
  reduced_ = num_.shifted_down(order_);
  leading_ = reduced_[0] / den_[0];
}

ExpansionPair jacobian_norms(const PointMap& map, const Eigen::VectorXd& x, double h) {
  if (h <= 0.0) h = 1e-5 * (1.0 + x.norm());
  Eigen::Index n = x.size();
  Eigen::VectorXd f0 = map(x);
  Eigen::MatrixXd jac(f0.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    jac.col(i) = (map(xp) - map(xm)) / (2.0 * h);
  }
  if (!jac.allFinite()) fail(ErrorKind::numeric, "non-finite difference in Jacobian");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  auto sv = svd.singularValues();
  return {sv(0), sv(sv.size() - 1)};
}

ExtensionPoint::ExtensionPoint(const SpherePoint& z, double r) : z_(z), depth_(1.0 - r) {
  if (!(r > 0.0)) fail(ErrorKind::domain, "radial part must be positive");
}

ExtensionPoint ExtensionPoint::from_depth(const SpherePoint& z, double depth) {
  ExtensionPoint p;
  p.z_ = z;
  p.depth_ = depth;
  if (!(depth < 1.0)) fail(ErrorKind::domain, "radial part must be positive");
  return p;
}

ExtensionPoint ExtensionPoint::from_cartesian(const Vec3& x) {
  double r = x.norm();
  return ExtensionPoint(SpherePoint::from_unit_vector(x / r), r);
}

double cartesian_distance(const ExtensionPoint& p, const ExtensionPoint& q) {
  Vec3 u = p.z().unit_vector(), v = q.z().unit_vector();
  Vec3 diff = (u - v) - (p.depth() * u - q.depth() * v);
  return diff.norm();
}

double radial_product_metric(const ExtensionPoint& p, const ExtensionPoint& q) {
  double d = sph_dist(p.z(), q.z());
  if (d > 0.5 * std::numbers::pi + 1e-12)
    fail(ErrorKind::domain, "radial product metric needs points in a common hemisphere");
  return 0.5 * (p.r() + q.r()) * d + std::abs(p.depth() - q.depth());
}

}  // namespace qrx
