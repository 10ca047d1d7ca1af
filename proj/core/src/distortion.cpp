#include "qrx/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "parallel.hpp"
#include "qrx/error.hpp"

namespace qrx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::pair<Vec3, Vec3> tangent_frame(const Vec3& n) {
  Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e1 = (a - a.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do v = Vec3(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-6);
  return v.normalized();
}

// Point of the spherical cap of angular radius r around n0.
Vec3 random_in_cap(std::mt19937_64& rng, const Vec3& n0, double r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto [e1, e2] = tangent_frame(n0);
  double th = r * std::sqrt(u(rng)), ph = 2.0 * std::numbers::pi * u(rng);
  return std::cos(th) * n0 + std::sin(th) * (std::cos(ph) * e1 + std::sin(ph) * e2);
}

}  // namespace

std::vector<double> epsilon_schedule(const DistortionSettings& s, double scale) {
  if (!(s.eps_max > 0.0 && s.eps_min > 0.0 && s.eps_min <= s.eps_max && s.ratio > 0.0 &&
        s.ratio < 1.0))
    fail(ErrorKind::config, "invalid distortion radius schedule");
  std::vector<double> out;
  for (double e = s.eps_max; e >= s.eps_min * (1.0 - 1e-12); e *= s.ratio) out.push_back(e * scale);
  return out;
}

std::vector<Vec3> fibonacci_directions(int count) {
  std::vector<Vec3> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    double y = 1.0 - 2.0 * (i + 0.5) / count;
    double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    out.emplace_back(r * std::cos(golden * i), y, r * std::sin(golden * i));
  }
  return out;
}

PointDistortion distortion_from_distances(const std::function<double(int, std::size_t)>& distance,
                                          const std::vector<double>& eps, int directions, int tail) {
  PointDistortion out;
  out.eps = eps;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool ok = true;
    for (int k = 0; k < directions && ok; ++k) {
      double d = distance(k, i);
      if (!std::isfinite(d)) ok = false;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    out.ratio.push_back(ok ? (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) : kNaN);
  }
  std::vector<double> used;
  for (std::size_t i = eps.size(); i-- > 0 && static_cast<int>(used.size()) < tail;)
    if (!std::isnan(out.ratio[i])) used.push_back(out.ratio[i]);
  if (used.empty()) fail(ErrorKind::numeric, "no probe radius produced a distortion estimate");
  out.K = *std::max_element(used.begin(), used.end());
  out.spread = out.K - *std::min_element(used.begin(), used.end());
  return out;
}

PointDistortion estimate_distortion(const PointMap& f, const Eigen::VectorXd& x,
                                    const DistortionSettings& s) {
  if (x.size() != 2 && x.size() != 3) fail(ErrorKind::config, "distortion needs a point of R^2 or R^3");
  auto eps = epsilon_schedule(s);
  std::vector<Eigen::VectorXd> dirs;
  if (x.size() == 3) {
    for (auto& v : fibonacci_directions(s.directions)) dirs.push_back(v);
  } else {
    for (int k = 0; k < s.directions; ++k) {
      double a = 2.0 * std::numbers::pi * k / s.directions;
      dirs.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
  }
  Eigen::VectorXd fx = f(x);
  auto distance = [&](int k, std::size_t i) {
    try {
      return (f(x + eps[i] * dirs[k]) - fx).norm();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::domain) throw;
      return kNaN;
    }
  };
  return distortion_from_distances(distance, eps, s.directions, s.tail);
}

ExtensionPoint probe_point(const ExtensionPoint& p, const Vec3& dir, double eps) {
  Vec3 n = p.z().unit_vector();
  auto [e1, e2] = tangent_frame(n);
  double R = p.r(), c = dir.z();
  double tang2 = dir.x() * dir.x() + dir.y() * dir.y();
  Vec3 v = (R + eps * c) * n + eps * (dir.x() * e1 + dir.y() * e2);
  double len = v.norm();
  double one_minus_sq = (p.depth() - eps * c) * (2.0 - p.depth() + eps * c) - eps * eps * tang2;
  return ExtensionPoint::from_depth(SpherePoint::from_unit_vector(v / len), one_minus_sq / (1.0 + len));
}

double fitted_slope(const std::vector<double>& y) {
  std::size_t n = y.size();
  if (n < 2) return 0.0;
  double mx = (n + 1) / 2.0, my = 0.0;
  for (double v : y) my += v;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = (i + 1) - mx;
    sxy += dx * (y[i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

DistortionReport uniform_K_report(const ShellStep& step, const std::vector<DistortionSample>& samples,
                                  const UniformKSettings& settings) {
  const int nmax = settings.n_max;
  const auto dirs = fibonacci_directions(settings.probe.directions);
  const int ndir = static_cast<int>(dirs.size());
  std::vector<DistortionSample> out(samples);
  std::vector<std::string> why(samples.size());

  detail::parallel_for(samples.size(), [&](std::size_t s) {
    DistortionSample& smp = out[s];
    smp.K.clear();
    smp.spread.clear();
    auto eps = epsilon_schedule(settings.probe, smp.p.depth());
    const std::size_t ne = eps.size();
    std::vector<ExtensionPoint> probes;
    std::vector<int> hints;
    std::vector<char> alive;
    for (int k = 0; k < ndir; ++k)
      for (std::size_t i = 0; i < ne; ++i) {
        probes.push_back(probe_point(smp.p, dirs[k], eps[i]));
        hints.push_back(smp.hint);
        alive.push_back(1);
      }
    ExtensionPoint center = smp.p;
    int hint = smp.hint;
    for (int n = 1; n <= nmax; ++n) {
      try {
        center = step(center, hint);
      } catch (const Error& e) {
        why[s] = std::string("center orbit stopped at n = ") + std::to_string(n) + ": " + e.what();
        smp.K.clear();
        return;
      }
      std::vector<double> dist(probes.size(), kNaN);
      for (std::size_t j = 0; j < probes.size(); ++j) {
        if (!alive[j]) continue;
        try {
          probes[j] = step(probes[j], hints[j]);
          dist[j] = cartesian_distance(probes[j], center);
        } catch (const Error&) {
          alive[j] = 0;
        }
      }
      auto pd = distortion_from_distances(
          [&](int k, std::size_t i) { return dist[k * ne + i]; }, eps, ndir, settings.probe.tail);
      smp.K.push_back(pd.K);
      smp.spread.push_back(pd.spread);
    }
  });

  DistortionReport rep;
  rep.K.assign(nmax, 1.0);
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (static_cast<int>(out[s].K.size()) != nmax) {
      ++rep.dropped;
      rep.notes.push_back("sample " + std::to_string(s) + " dropped: " + why[s]);
      continue;
    }
    for (int n = 0; n < nmax; ++n) rep.K[n] = std::max(rep.K[n], out[s].K[n]);
    rep.samples.push_back(std::move(out[s]));
  }
  if (rep.samples.empty()) fail(ErrorKind::numeric, "every distortion sample was dropped");
  std::vector<double> logs;
  for (double k : rep.K) {
    rep.finite = rep.finite && std::isfinite(k);
    rep.max_K = std::max(rep.max_K, k);
    logs.push_back(std::log(k));
  }
  rep.slope = rep.finite ? fitted_slope(logs) : std::numeric_limits<double>::infinity();
  rep.pass = rep.finite && rep.slope < settings.slope_tol;
  return rep;
}

SampleSet extension_samples(const ExtensionDomain& domain, const UniformKSettings& settings) {
  const RadiusField& field = domain.field();
  const ChartAtlas& atlas = domain.atlas();
  const int L = domain.N0() + settings.level_offset;
  if (L + field.window() > field.n_max())
    fail(ErrorKind::config, "sample level plus window exceeds the field's n_max");
  auto crit = atlas.critical_nodes();
  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t want_crit =
      crit.empty() ? 0 : static_cast<std::size_t>(settings.critical_fraction * settings.samples);
  const std::size_t max_attempts = 50 * settings.samples + 100;
  auto step = extension_step(domain);
  SampleSet out;
  std::size_t have_crit = 0;
  for (std::size_t attempt = 0; out.samples.size() < settings.samples; ++attempt) {
    if (attempt >= max_attempts) fail(ErrorKind::numeric, "too many rejected distortion samples");
    bool critical = have_crit < want_crit;
    SpherePoint z;
    if (critical) {
      int c = crit[attempt % crit.size()];
      double a = 0.2 + 0.7 * u(rng);
      z = atlas.inverse(c, std::polar(a * atlas.radius(c, L), 2.0 * std::numbers::pi * u(rng)));
    } else {
      z = SpherePoint::from_unit_vector(random_unit(rng));
    }
    double t = 0.1 + 0.8 * u(rng);
    DistortionSample smp;
    try {
      int m = field.consecutive_index(L, z);
      auto d = field.depths(z, std::min(L, m), std::max(L, m));
      double dn = d[L - std::min(L, m)], dm = d[m - std::min(L, m)];
      smp.p = ExtensionPoint::from_depth(z, (1.0 - t) * dn + t * dm);
      smp.hint = L;
      smp.critical = critical;
      ExtensionPoint cur = smp.p;
      int hint = L;
      bool escaped = false;
      for (int k = 0; k < settings.n_max && !escaped; ++k) {
        if (!domain.contains(cur)) escaped = true;
        else cur = step(cur, hint);
      }
      if (escaped) {
        ++out.rejected_escape;
        continue;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::branch && e.kind() != ErrorKind::axis_proximity &&
          e.kind() != ErrorKind::window)
        throw;
      ++out.rejected_branch;
      continue;
    }
    have_crit += critical;
    out.samples.push_back(smp);
  }
  return out;
}

std::vector<DistortionSample> shell_samples(std::size_t count, double depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DistortionSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    DistortionSample s;
    s.p = ExtensionPoint::from_depth(SpherePoint::from_unit_vector(random_unit(rng)), depth);
    out.push_back(s);
  }
  return out;
}

ShellStep extension_step(const ExtensionDomain& domain) {
  return [&domain](const ExtensionPoint& p, int& hint) {
    auto img = domain.extend_traced(p, hint);
    hint = img.n > 0 ? img.n - 1 : -1;
    return img.point;
  };
}

ShellStep radial_control_step(const RationalFunction& f, double k) {
  return [f, k](const ExtensionPoint& p, int&) {
    return ExtensionPoint::from_depth(f(p.z()), k * f.sph_derivative(p.z()) * p.depth());
  };
}

ShellStep mobius_step(const RationalFunction& g) {
  if (g.degree() != 1) fail(ErrorKind::config, "Möbius step needs a degree-1 map");
  return [g](const ExtensionPoint& p, int&) {
    return ExtensionPoint::from_depth(g(p.z()), g.sph_derivative(p.z()) * p.depth());
  };
}

DistortionReport uniform_K_report(const ExtensionDomain& domain, const UniformKSettings& settings) {
  SampleSet set = extension_samples(domain, settings);
  DistortionReport rep = uniform_K_report(extension_step(domain), set.samples, settings);
  rep.notes.insert(rep.notes.begin(),
                   "candidates rejected: " + std::to_string(set.rejected_escape) + " left Omega, " +
                       std::to_string(set.rejected_branch) + " hit an undefined branch");
  return rep;
}

KoebeCheck koebe_check(const RationalFunction& f, const SpherePoint& z0, double r, double r_outer,
                       std::size_t pairs, std::uint64_t seed) {
  if (!(r > 0.0 && r < r_outer && r_outer < std::numbers::pi))
    fail(ErrorKind::config, "Koebe check needs 0 < r < R_outer < pi");
  std::mt19937_64 rng(seed);
  Vec3 n0 = z0.unit_vector();
  SpherePoint fz0 = f(z0);

  // Univalence and hemisphere image on the outer ball, by solving f(z) = f(w).
  const int probes = 256;
  for (int i = 0; i < probes; ++i) {
    SpherePoint w = SpherePoint::from_unit_vector(random_in_cap(rng, n0, r_outer));
    SpherePoint y = f(w);
    if (sph_dist(y, fz0) >= 0.5 * std::numbers::pi)
      fail(ErrorKind::domain, "image of the outer ball leaves a hemisphere");
    Poly h = y.b() * f.numerator() - y.a() * f.denominator();
    std::vector<SpherePoint> pre;
    for (cplx root : poly_roots(h.trimmed(1e-14))) pre.emplace_back(root);
    if (h.degree(1e-14) < f.degree()) pre.push_back(SpherePoint::infinity());
    for (auto& z : pre)
      if (sph_dist(z, w) > 1e-7 && sph_dist(z, z0) <= r_outer)
        fail(ErrorKind::domain, "map is not injective on the outer ball");
  }

  KoebeCheck out;
  out.c1 = std::numeric_limits<double>::infinity();
  out.c2 = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    SpherePoint z = SpherePoint::from_unit_vector(random_in_cap(rng, n0, r));
    SpherePoint w = SpherePoint::from_unit_vector(random_in_cap(rng, n0, r));
    double d = sph_dist(z, w);
    if (d < 1e-9) continue;
    double sz = f.sph_derivative(z), sw = f.sph_derivative(w);
    double ratio = sph_dist(f(z), f(w)) / (sz * d);
    out.c1 = std::min(out.c1, ratio);
    out.c2 = std::max(out.c2, ratio);
    out.sharp_ratio = std::max(out.sharp_ratio, std::max(sw / sz, sz / sw));
    ++out.pairs;
  }
  return out;
}

double ContinuityReport::max() const { return std::max({lateral, bottom, top}); }

ContinuityReport boundary_continuity_check(const ExtensionDomain& domain, int c, int n,
                                           int samples_on_boundary) {
  const ChartAtlas& atlas = domain.atlas();
  const ModifiedMapFamily& family = domain.field().family();
  const RadiusField& field = domain.field();
  if (atlas.node(c).degree < 2) fail(ErrorKind::domain, "continuity check needs a critical node");
  ContinuityReport rep;
  const double R = atlas.radius(c, n);
  const int k = samples_on_boundary;
  const double ts[] = {0.0, 0.125, 0.25, 0.5, 0.75, 0.875, 1.0};
  for (int i = 0; i < k; ++i) {
    double a = 2.0 * std::numbers::pi * (i + 0.5) / k;
    // Lateral face.
    cplx x = std::polar(R, a);
    SpherePoint z = atlas.inverse(c, x);
    for (double t : ts) {
      auto crit = domain.critical_image(c, x, n, t);
      auto reg = domain.regular_image(z, n, n + 1, t);
      rep.lateral = std::max(rep.lateral, cartesian_distance(crit.point, reg.point));
      ++rep.samples;
    }
    // Bottom and top faces at interior radii.
    for (double frac : {0.1, 0.35, 0.6, 0.85}) {
      cplx xi = std::polar(frac * R, a);
      SpherePoint zi = atlas.inverse(c, xi);
      SpherePoint lo_img = family.eval(n, zi), hi_img = family.eval(n + 1, zi);
      auto lower = ExtensionPoint::from_depth(lo_img, field.depth(n - 1, lo_img));
      auto upper = ExtensionPoint::from_depth(hi_img, field.depth(n, hi_img));
      rep.bottom = std::max(rep.bottom, cartesian_distance(domain.critical_image(c, xi, n, 0.0).point, lower));
      rep.top = std::max(rep.top, cartesian_distance(domain.critical_image(c, xi, n, 1.0).point, upper));
      rep.samples += 2;
    }
  }
  return rep;
}

}  // namespace qrx
