#include "qrx/extension.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qrx/error.hpp"
#include "qrx/winding.hpp"

namespace qrx {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::sphere: return "sphere";
    case Branch::regular: return "regular";
    case Branch::critical: return "critical";
  }
  return "unknown";
}

ExtensionDomain::ExtensionDomain(std::shared_ptr<const RadiusField> field, int N0,
                                 ExtensionSettings settings)
    : field_(std::move(field)), N0_(N0), settings_(settings) {
  if (N0_ < 1 || N0_ > field_->n_max()) fail(ErrorKind::config, "N0 outside the tracked levels");
  if (!(settings_.mu_scale > 0.0)) fail(ErrorKind::config, "mu scale must be positive");
}

ExtensionDomain ExtensionDomain::build(std::shared_ptr<const ModifiedMapFamily> family,
                                       int grid_level, ExtensionSettings settings) {
  auto grid = analysis_grid(*family, grid_level);
  auto field = std::make_shared<RadiusField>(RadiusField::calibrate(family, grid));
  int N0 = compute_N0(*field, grid);
  return ExtensionDomain(std::move(field), N0, settings);
}

ExtensionPoint reflect(const ExtensionPoint& p) {
  double d = p.depth();
  if (!(d < 1.0)) fail(ErrorKind::domain, "reflection of the origin");
  return ExtensionPoint::from_depth(p.z(), -d / (1.0 - d));
}

bool ExtensionDomain::contains(const ExtensionPoint& p) const {
  if (!(p.depth() < 1.0)) return false;
  ExtensionPoint q = p.depth() < 0.0 ? reflect(p) : p;
  return q.depth() <= field_->depth(N0_, q.z()) * (1.0 + 1e-12);
}

PrismLocation ExtensionDomain::locate(const ExtensionPoint& p, int hint) const {
  const SpherePoint& z = p.z();
  double delta = p.depth();
  if (!(delta > 0.0)) fail(ErrorKind::domain, "prism location needs a point inside the unit ball");
  const int W = field_->window(), top = field_->n_max();
  int h = hint >= 0 ? hint : N0_;
  for (int iter = 0; iter <= top + 2; ++iter) {
    int lo = std::max(0, h - W), hi = std::min(top, h + W);
    auto d = field_->depths(z, lo, hi);
    int n = -1;
    for (int i = 0; i <= hi - lo; ++i)
      if (d[i] >= delta && (n < 0 || d[i] < d[n - lo])) n = lo + i;
    if (n < 0) {
      if (lo == 0) fail(ErrorKind::domain, "point lies below S_0");
      h = std::max(0, lo - W);
      continue;
    }
    if ((n - W < lo && lo > 0) || (n + W > hi && hi < top)) {
      h = n;
      continue;
    }
    int wlo = std::max(lo, n - W), whi = std::min(hi, n + W);
    std::vector<double> sub(d.begin() + (wlo - lo), d.begin() + (whi - lo) + 1);
    int m = consecutive_from_depths(sub, wlo, n);
    if (m < 0) {
      if (whi == top) fail(ErrorKind::domain, "point lies beyond the tracked levels");
      fail(ErrorKind::window, "no consecutive sphere in the window; raise the window");
    }
    PrismLocation loc;
    loc.n = n;
    loc.m = m;
    loc.depth_n = d[n - lo];
    loc.depth_m = d[m - lo];
    double gap = loc.depth_n - loc.depth_m;
    loc.t = gap <= settings_.degenerate * loc.depth_n ? 0.0 : (loc.depth_n - delta) / gap;
    return loc;
  }
  fail(ErrorKind::window, "prism search did not settle");
}

ExtensionImage ExtensionDomain::regular_image(const SpherePoint& z, int n, int m, double t) const {
  if (n < 1 || m < 1) fail(ErrorKind::domain, "regular branch needs prism indices >= 1");
  SpherePoint fz = field_->family().map()(z);
  int lo = std::min(n, m) - 1, hi = std::max(n, m) - 1;
  auto d = field_->depths(fz, lo, hi);
  double depth = (1.0 - t) * d[n - 1 - lo] + t * d[m - 1 - lo];
  return {ExtensionPoint::from_depth(fz, depth), Branch::regular, -1, n};
}

ExtensionImage ExtensionDomain::critical_image(int c, cplx x, int n, double t) const {
  const auto& node = atlas().node(c);
  if (node.degree < 2) fail(ErrorKind::domain, "critical branch at a non-critical node");
  if (n < 1) fail(ErrorKind::domain, "critical branch needs n >= 1");
  int d = node.degree;
  cplx lower = winding_rescaled(d, atlas().radius(c, n), x);
  cplx upper = winding_rescaled(d, atlas().radius(c, n + 1), x);
  cplx w = (1.0 - t) * lower + t * upper;
  SpherePoint img = atlas().inverse(node.image, w);
  double tp = t * settings_.mu_scale;
  auto depths = field_->depths(img, n - 1, n);
  double depth = (1.0 - tp) * depths[0] + tp * depths[1];
  return {ExtensionPoint::from_depth(img, depth), Branch::critical, c, n};
}

ExtensionImage ExtensionDomain::extend_inner(const ExtensionPoint& p, int hint) const {
  if (!contains(p)) fail(ErrorKind::domain, "point outside the extension domain");
  const SpherePoint& z = p.z();
  if (p.depth() == 0.0)
    return {ExtensionPoint::from_depth(field_->family().map()(z), 0.0), Branch::sphere, -1, 0};
  PrismLocation loc = locate(p, hint);
  if (loc.n < 1) fail(ErrorKind::domain, "prism index below 1");
  cplx x;
  int c = field_->family().critical_owner(loc.n, z, &x);
  if (c < 0) return regular_image(z, loc.n, loc.m, loc.t);
  if (sph_dist(z, atlas().node(c).z) < settings_.axis_tol)
    fail(ErrorKind::axis_proximity, "point on a critical axis; branch resolution is ill-conditioned");
  if (loc.m != loc.n + 1)
    fail(ErrorKind::branch, "critical prism whose consecutive sphere is not the next level");
  return critical_image(c, x, loc.n, loc.t);
}

ExtensionImage ExtensionDomain::extend_traced(const ExtensionPoint& p, int hint) const {
  if (p.depth() >= 0.0) return extend_inner(p, hint);
  ExtensionImage img = extend_inner(reflect(p), hint);
  img.point = reflect(img.point);
  return img;
}

double ExtensionDomain::critical_height(int c, int n) const {
  auto d = field_->depths(atlas().node(c).z, n, n + 1);
  return d[0] - d[1];
}

double ExtensionDomain::postcritical_height(int y, int n) const {
  auto d = field_->depths(atlas().node(y).z, n - 1, n);
  return d[0] - d[1];
}

double ExtensionDomain::cylinder_radius(PrismSide side, int node, int n) const {
  return side == PrismSide::critical ? atlas().radius(node, n) : atlas().radius(node, n - 1);
}

namespace {

std::pair<int, int> side_levels(PrismSide side, int n) {
  return side == PrismSide::critical ? std::pair{n, n + 1} : std::pair{n - 1, n};
}

}  // namespace

ExtensionPoint ExtensionDomain::prism_parametrization(PrismSide side, int node, int n,
                                                      const CylinderCoords& c) const {
  if (n < 1) fail(ErrorKind::domain, "prism index below 1");
  double R = cylinder_radius(side, node, n);
  if (std::abs(c.x) > R * (1.0 + 1e-12)) fail(ErrorKind::domain, "cylinder coordinate outside the disk");
  double q = side == PrismSide::critical ? critical_height(node, n) : postcritical_height(node, n);
  if (c.t < -1e-15 || c.t > q * (1.0 + 1e-12)) fail(ErrorKind::domain, "cylinder height outside [0, q]");
  SpherePoint z = atlas().inverse(node, c.x);
  auto [a, b] = side_levels(side, n);
  auto d = field_->depths(z, a, b);
  double tau = c.t / q;
  return ExtensionPoint::from_depth(z, (1.0 - tau) * d[0] + tau * d[1]);
}

CylinderCoords ExtensionDomain::prism_coordinates(PrismSide side, int node, int n,
                                                  const ExtensionPoint& p) const {
  if (n < 1) fail(ErrorKind::domain, "prism index below 1");
  cplx x = atlas().chart_value(node, p.z());
  if (std::abs(x) > cylinder_radius(side, node, n) * (1.0 + 1e-9))
    fail(ErrorKind::domain, "point outside the prism base");
  double q = side == PrismSide::critical ? critical_height(node, n) : postcritical_height(node, n);
  auto [a, b] = side_levels(side, n);
  auto d = field_->depths(p.z(), a, b);
  return {x, q * (d[0] - p.depth()) / (d[0] - d[1])};
}

CylinderCoords ExtensionDomain::beta_map(int c, int n, const CylinderCoords& in) const {
  const auto& node = atlas().node(c);
  double R = atlas().radius(c, n);
  if (std::abs(in.x) > R * (1.0 + 1e-12)) fail(ErrorKind::domain, "cylinder coordinate outside the disk");
  double q = critical_height(c, n);
  if (in.t < -1e-15 || in.t > q * (1.0 + 1e-12)) fail(ErrorKind::domain, "cylinder height outside [0, q]");
  double mu = postcritical_height(node.image, n) / q * settings_.mu_scale;
  double tau = in.t / q;
  cplx lower = winding_rescaled(node.degree, R, in.x);
  cplx upper = winding_rescaled(node.degree, atlas().radius(c, n + 1), in.x);
  return {(1.0 - tau) * lower + tau * upper, mu * in.t};
}

IterationResult iterate_extension(const ExtensionDomain& domain, const ExtensionPoint& p, int k,
                                  bool record) {
  IterationResult res;
  ExtensionPoint cur = p;
  int hint = -1;
  if (record) res.orbit.push_back({0, cur, Branch::sphere, -1});
  for (int j = 0; j < k; ++j) {
    if (!domain.contains(cur)) {
      res.escape = j;
      break;
    }
    ExtensionImage img = domain.extend_traced(cur, hint);
    hint = img.n > 0 ? img.n - 1 : -1;
    cur = img.point;
    ++res.steps;
    if (record) res.orbit.push_back({j + 1, cur, img.branch, img.owner});
  }
  res.point = cur;
  return res;
}

void write_orbit(std::ostream& out, const ExtensionDomain& domain, const IterationResult& orbit) {
  auto old = out.precision(17);
  for (auto& r : orbit.orbit) {
    out << r.step << ' ';
    const SpherePoint& z = r.point.z();
    if (z.is_infinity()) out << "inf";
    else out << z.value().real() << ' ' << z.value().imag();
    out << ' ' << r.point.r() << ' ' << (r.step == 0 ? "start" : to_string(r.branch)) << ' '
        << (r.owner >= 0 ? format_point(domain.atlas().node(r.owner).z) : "-") << '\n';
  }
  if (orbit.escape) out << "# escaped at step " << *orbit.escape << '\n';
  out.precision(old);
}

}  // namespace qrx
