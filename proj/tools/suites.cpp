#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pipeline.hpp"
#include "qrx/error.hpp"
#include "qrx/winding.hpp"

namespace qrx::pipeline {

namespace {

constexpr double kPi = std::numbers::pi;

SpherePoint random_point(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do v = Vec3(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-6);
  return SpherePoint::from_unit_vector(v.normalized());
}

Eigen::VectorXd vec2(cplx z) { return Eigen::Vector2d(z.real(), z.imag()); }
cplx as_cplx(const Eigen::VectorXd& x) { return {x[0], x[1]}; }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

const ExtensionDomain& domain_of(const Built& b) {
  if (!b.domain) fail(ErrorKind::config, "suite needs a built extension domain");
  return *b.domain;
}

void check(SuiteResult& r, bool ok, const std::string& name) {
  if (!ok) r.failures.push_back(r.suite + "." + name);
}

SuiteResult finish(SuiteResult r) {
  r.pass = r.failures.empty();
  return r;
}

// Closed-form expansion norms of the winding maps against finite
// differences, and the sector bi-Lipschitz bounds.
SuiteResult suite_winding(const JobConfig& c) {
  SuiteResult r;
  r.suite = "winding";
  const double tol = c.tolerance("winding");
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t violations = 0;
  for (int d : {2, 3, 4}) {
    double err_unit = 0.0, err_scaled = 0.0;
    const cplx lambda = 4.0;
    const int n = 2;
    const double rho = std::pow(std::abs(lambda), -static_cast<double>(n) / d);
    for (int i = 0; i < 1000; ++i) {
      cplx z = std::polar(0.05 + 0.9 * u(rng), 2.0 * kPi * u(rng));
      auto fd = jacobian_norms([d](const Eigen::VectorXd& x) { return vec2(winding_eval(d, as_cplx(x))); },
                               vec2(z));
      auto cf = winding_rescaled_norms(d, 1.0, z);
      err_unit = std::max({err_unit, rel_err(cf.max_expansion, fd.max_expansion),
                           rel_err(cf.min_expansion, fd.min_expansion)});
      cplx zs = rho * z;
      auto fds = jacobian_norms(
          [&](const Eigen::VectorXd& x) { return vec2(winding_scaled(d, lambda, n, as_cplx(x))); },
          vec2(zs));
      auto cfs = winding_norms(d, lambda, n, zs);
      err_scaled = std::max({err_scaled, rel_err(cfs.max_expansion, fds.max_expansion),
                             rel_err(cfs.min_expansion, fds.min_expansion)});
    }
    Sector sector{0.0, kPi / d, 1.0};
    auto sb = sector_bounds_check(d, sector, 10000, c.seed + d);
    r.per_sample.push_back({{"d", d},
                            {"norm_rel_err", err_unit},
                            {"scaled_norm_rel_err", err_scaled},
                            {"sector_pairs", sb.pairs},
                            {"sector_violations", sb.violations}});
    worst = std::max({worst, err_unit, err_scaled});
    violations += sb.violations;
    check(r, err_unit < tol && err_scaled < tol, "fd_norms[d=" + std::to_string(d) + "]");
    check(r, sb.violations == 0, "sector_bounds[d=" + std::to_string(d) + "]");
  }
  r.aggregate = {{"max_norm_rel_err", worst}, {"sector_violations", violations}};
  return finish(r);
}

SuiteResult suite_coordinates(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "coordinates";
  const double tol = c.tolerance("koenig");
  const ChartAtlas& atlas = b.family->atlas();
  double worst_k = 0.0, worst_d = 0.0;
  for (int x = 0; x < static_cast<int>(atlas.nodes().size()); ++x) {
    const auto& node = atlas.node(x);
    json row = {{"node", x}, {"point", format_point(node.z)}, {"degree", node.degree}};
    if (node.cycle_pos < 0) {
      auto dr = diagram_residual(atlas, x, 1000, c.seed + x);
      row["diagram_residual"] = dr.max_residual;
      worst_d = std::max(worst_d, dr.max_residual);
      check(r, dr.max_residual < tol, "diagram_residual[" + format_point(node.z) + "]");
    } else {
      auto kr = koenig_residual(atlas, x, 1000, c.seed + 100 + x);
      row["koenig_residual"] = kr.max_residual;
      worst_k = std::max(worst_k, kr.max_residual);
      check(r, kr.max_residual < tol, "koenig_residual[" + format_point(node.z) + "]");
    }
    r.per_sample.push_back(row);
  }
  json r0 = json::array();
  for (auto& k : atlas.koenig()) r0.push_back(k.r0());
  r.aggregate = {{"max_koenig_residual", worst_k}, {"max_diagram_residual", worst_d}, {"r0", r0}};
  return finish(r);
}

// A point is regular for the composition of length n when at most one step
// uses a winding branch and no step lies near a winding circle or center,
// where the composition is only Lipschitz.
bool regular_for_fd(const ModifiedMapFamily& fam, int n, const SpherePoint& z) {
  const ChartAtlas& atlas = fam.atlas();
  auto tr = fam.compose(n, z);
  int windings = 0;
  for (auto& st : tr.steps) {
    windings += st.winding;
    auto m = atlas.locate(st.z);
    if (m.node < 0 || !atlas.node(m.node).critical) continue;
    double a = std::abs(m.w) / atlas.radius(m.node, st.index);
    if (a > 0.95 && a < 1.05) return false;
    if (st.winding && a < 0.05) return false;
  }
  return windings <= 1;
}

// ||D(f_1 o ... o f_n)|| in the spherical metric by central differences in
// affine charts: the chart z or 1/z with modulus at most one on each side.
double fd_compose_norm(const ModifiedMapFamily& fam, int n, const SpherePoint& z) {
  const bool in_inv = std::abs(z.a()) > std::abs(z.b());
  cplx u0 = in_inv ? z.reciprocal() : z.value();
  SpherePoint w0 = compose_eval(fam, n, z).first;
  const bool out_inv = std::abs(w0.a()) > std::abs(w0.b());
  auto chart_map = [&](const Eigen::VectorXd& x) {
    cplx u = as_cplx(x);
    SpherePoint p = in_inv ? SpherePoint::homogeneous(1.0, u) : SpherePoint(u);
    SpherePoint w = compose_eval(fam, n, p).first;
    return vec2(out_inv ? w.reciprocal() : w.value());
  };
  cplx v0 = out_inv ? w0.reciprocal() : w0.value();
  auto j = jacobian_norms(chart_map, vec2(u0));
  return j.max_expansion * (1.0 + std::norm(u0)) / (1.0 + std::norm(v0));
}

SuiteResult suite_derivative(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "derivative";
  const double tol = c.tolerance("derivative");
  std::mt19937_64 rng(c.seed);
  double worst = 0.0;
  std::size_t points = 0, rejected = 0;
  while (points < 100) {
    SpherePoint z = random_point(rng);
    bool ok = true;
    for (int n = 1; n <= 6 && ok; ++n) ok = regular_for_fd(*b.family, n, z);
    if (!ok) {
      if (++rejected > 100000) fail(ErrorKind::numeric, "no regular points for the derivative test");
      continue;
    }
    ++points;
    json row = {{"z", format_point(z)}};
    json errs = json::array();
    for (int n = 1; n <= 6; ++n) {
      double e = rel_err(compose_norm(*b.family, n, z), fd_compose_norm(*b.family, n, z));
      errs.push_back(e);
      worst = std::max(worst, e);
    }
    row["rel_err"] = errs;
    r.per_sample.push_back(row);
  }
  check(r, worst < tol, "compose_norm_fd");
  r.aggregate = {{"points", points}, {"max_rel_err", worst}, {"rejected_nonregular", rejected}};
  return finish(r);
}

constexpr int kGrowthLevels = 12;

struct Growth {
  std::vector<double> mins;  // entry n, n >= 1
  int first_increasing_violation = -1;
  int threshold_index = -1;  // first n with min > 10 s
};

Growth growth_table(const Built& b) {
  Growth g;
  g.mins = min_norm_growth(*b.family, b.grid, kGrowthLevels);
  double s = domain_of(b).field().s();
  for (int n = 3; n < kGrowthLevels; ++n)
    if (!(g.mins[n + 1] > g.mins[n]) && g.first_increasing_violation < 0)
      g.first_increasing_violation = n + 1;
  for (int n = 1; n <= kGrowthLevels; ++n)
    if (g.mins[n] > 10.0 * s) {
      g.threshold_index = n;
      break;
    }
  return g;
}

SuiteResult suite_growth(const JobConfig&, const Built& b) {
  SuiteResult r;
  r.suite = "growth";
  auto g = growth_table(b);
  double s = domain_of(b).field().s();
  for (int n = 1; n <= kGrowthLevels; ++n) r.per_sample.push_back({{"n", n}, {"min_norm", g.mins[n]}});
  check(r, g.first_increasing_violation < 0,
        "strictly_increasing[n=" + std::to_string(g.first_increasing_violation) + "]");
  check(r, g.threshold_index > 0 && g.threshold_index <= 10, "exceeds_10s_by_10");
  r.aggregate = {{"s", s},
                 {"grid_points", b.grid.size()},
                 {"first_non_increase", g.first_increasing_violation},
                 {"threshold_index", g.threshold_index}};
  return finish(r);
}

SuiteResult suite_radii(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "radii";
  const RadiusField& field = domain_of(b).field();
  const int top = field.n_max();
  std::size_t out_of_range = 0;
  std::vector<double> min_r(top + 1, 1.0);
  for (auto& z : b.grid) {
    auto d = field.depths(z, 0, top);
    for (int n = 0; n <= top; ++n) {
      if (!(d[n] > 0.0 && d[n] < 1.0)) ++out_of_range;
      min_r[n] = std::min(min_r[n], 1.0 - d[n]);
    }
  }
  check(r, out_of_range == 0, "radii_in_unit_interval");
  auto g = growth_table(b);
  int N = g.threshold_index > 0 ? g.threshold_index : 10;
  double acc = 1.0 - min_r[N];
  check(r, acc < c.tolerance("accumulation"), "accumulation[N=" + std::to_string(N) + "]");
  int first_below = -1;
  for (int n = 1; n <= top && first_below < 0; ++n)
    if (1.0 - min_r[n] < c.tolerance("accumulation")) first_below = n;

  const ChartAtlas& atlas = b.family->atlas();
  double a_min = std::numeric_limits<double>::infinity(), b_max = 0.0;
  for (int x = 0; x < static_cast<int>(atlas.nodes().size()); ++x) {
    const auto& node = atlas.node(x);
    if (!node.critical && !node.postcritical) continue;
    auto m = critical_monotonicity_report(field, x, 2, 8, 100, c.seed + x);
    r.per_sample.push_back({{"node", format_point(node.z)},
                            {"a", m.a},
                            {"b", m.b},
                            {"samples", m.samples},
                            {"violations", m.violations}});
    a_min = std::min(a_min, m.a);
    b_max = std::max(b_max, m.b);
    check(r, m.violations == 0 && m.a > 0.0, "monotonicity[" + format_point(node.z) + "]");
  }
  r.aggregate = {{"out_of_range", out_of_range}, {"N", N},         {"accumulation", acc},
                 {"first_index_below_tolerance", first_below},
                 {"a", a_min},                   {"b", b_max},    {"min_r", min_r}};
  return finish(r);
}

SuiteResult suite_scaling(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "scaling";
  const ExtensionDomain& dom = domain_of(b);
  const RadiusField& field = dom.field();
  const RationalFunction& f = b.family->map();
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<int> level(2, std::min(field.n_max(), dom.N0() + 8));
  double worst = 0.0;
  std::size_t points = 0;
  while (points < 1000) {
    SpherePoint z = random_point(rng);
    int n = level(rng);
    if (b.family->critical_owner(n, z) >= 0) continue;
    double lhs = field.depth(n - 1, f(z));
    double rhs = f.sph_derivative(z) * field.depth(n, z);
    worst = std::max(worst, rel_err(lhs, rhs));
    ++points;
  }
  check(r, worst < c.tolerance("identity"), "distance_identity");
  r.aggregate = {{"points", points}, {"max_rel_err", worst}};
  return finish(r);
}

SuiteResult suite_consecutive(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "consecutive";
  const ExtensionDomain& dom = domain_of(b);
  const RadiusField& field = dom.field();
  const RationalFunction& f = b.family->map();
  std::mt19937_64 rng(c.seed);
  int hi = std::min(dom.N0() + 8, field.n_max() - field.window() - 1);
  if (hi < dom.N0() + 1) fail(ErrorKind::config, "n_max too small for the consecutive-index test");
  std::uniform_int_distribution<int> level(dom.N0() + 1, hi);
  std::size_t points = 0, violations = 0;
  while (points < 1000) {
    SpherePoint z = random_point(rng);
    int n = level(rng);
    if (b.family->critical_owner(n, z) >= 0) continue;
    int m = field.consecutive_index(n, z);
    int m1 = field.consecutive_index(n - 1, f(z));
    if (m1 != m - 1) {
      ++violations;
      if (r.per_sample.size() < 20)
        r.per_sample.push_back({{"z", format_point(z)}, {"n", n}, {"m", m}, {"m_image", m1}});
    }
    ++points;
  }
  check(r, violations == 0, "consecutive_index");
  r.aggregate = {{"points", points}, {"violations", violations}};
  return finish(r);
}

SuiteResult suite_continuity(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "continuity";
  const ExtensionDomain& dom = domain_of(b);
  ExtensionSettings bad = dom.settings();
  bad.mu_scale *= 1.01;
  ExtensionDomain faulty(dom.field_ptr(), dom.N0(), bad);
  double worst = 0.0, fault = 0.0, weakest_fault = std::numeric_limits<double>::infinity();
  for (int cn : dom.atlas().critical_nodes())
    for (int n = 2; n <= 6; ++n) {
      auto rep = boundary_continuity_check(dom, cn, n);
      auto f = boundary_continuity_check(faulty, cn, n);
      r.per_sample.push_back({{"node", format_point(dom.atlas().node(cn).z)},
                              {"n", n},
                              {"lateral", rep.lateral},
                              {"bottom", rep.bottom},
                              {"top", rep.top},
                              {"faulty_lateral", f.lateral}});
      worst = std::max(worst, rep.max());
      fault = std::max(fault, f.lateral);
      weakest_fault = std::min(weakest_fault, f.lateral);
    }
  check(r, worst < c.tolerance("continuity"), "boundary_residual");
  // The detector is the same max over the sweep; the weakest prism is reported
  // because the mismatch scales with the prism height.
  check(r, fault > c.tolerance("fault"), "fault_injection_detected");
  r.aggregate = {{"max_residual", worst},
                 {"max_faulty_residual", fault},
                 {"min_faulty_residual", weakest_fault}};
  return finish(r);
}

SuiteResult suite_distortion(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "distortion";
  const ExtensionDomain& dom = domain_of(b);
  UniformKSettings st;
  st.samples = c.samples;
  st.seed = c.seed;
  st.slope_tol = c.tolerance("slope");
  auto rep = uniform_K_report(dom, st);
  for (auto& s : rep.samples)
    r.per_sample.push_back({{"z", format_point(s.p.z())},
                            {"depth", s.p.depth()},
                            {"critical", s.critical},
                            {"K", s.K},
                            {"spread", s.spread}});
  auto shell = shell_samples(c.samples, 1e-9, c.seed);
  auto control = uniform_K_report(radial_control_step(b.family->map()), shell, st);
  const RationalFunction mobius({0.0, std::polar(1.2, 1.0)}, {1.0});
  auto conformal = uniform_K_report(mobius_step(mobius), shell, st);
  check(r, rep.pass, "uniform_distortion_slope");
  check(r, control.slope > c.tolerance("control"), "control_detected");
  check(r, conformal.slope < st.slope_tol, "mobius_slope");
  r.aggregate = {{"K", rep.K},
                 {"slope", rep.slope},
                 {"max_K", rep.max_K},
                 {"finite", rep.finite},
                 {"dropped", rep.dropped},
                 {"notes", rep.notes},
                 {"control_K", control.K},
                 {"control_slope", control.slope},
                 {"mobius_slope", conformal.slope}};
  return finish(r);
}

SuiteResult suite_spheres(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "spheres";
  const ExtensionDomain& dom = domain_of(b);
  const RadiusField& field = dom.field();
  const ChartAtlas& atlas = dom.atlas();
  auto crit = atlas.critical_nodes();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> level(dom.N0() + 1, dom.N0() + 8);
  if (dom.N0() + 8 + field.window() > field.n_max())
    fail(ErrorKind::config, "n_max too small for the sphere tests");

  auto draw = [&](int i, int n) {
    if (!crit.empty() && i % 2 == 1)
      return atlas.sample(crit[(i / 2) % crit.size()], n, 0.01 + 0.98 * u(rng), u(rng));
    return random_point(rng);
  };

  double worst = 0.0;
  std::size_t on_sphere = 0, undefined_sphere = 0, outside = 0;
  for (int i = 0; i < 1000; ++i) {
    int n = level(rng);
    SpherePoint z = draw(i, n);
    ExtensionPoint p = ExtensionPoint::from_depth(z, field.depth(n, z));
    if (!dom.contains(p)) {
      ++outside;
      continue;
    }
    try {
      auto img = dom.extend_traced(p, n);
      worst = std::max(worst, std::abs(img.point.depth() - field.depth(n - 1, img.point.z())));
      ++on_sphere;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::branch && e.kind() != ErrorKind::axis_proximity) throw;
      ++undefined_sphere;
    }
  }
  check(r, worst < c.tolerance("sphere"), "sphere_to_sphere");

  std::size_t in_prism = 0, violations = 0, undefined_prism = 0;
  for (int i = 0; i < 1000; ++i) {
    int n = level(rng);
    SpherePoint z = draw(i, n);
    int m = field.consecutive_index(n, z);
    double t = 0.05 + 0.9 * u(rng);
    double dn = field.depth(n, z), dm = field.depth(m, z);
    ExtensionPoint p = ExtensionPoint::from_depth(z, (1.0 - t) * dn + t * dm);
    if (!dom.contains(p)) {
      ++outside;
      continue;
    }
    ExtensionImage img;
    try {
      img = dom.extend_traced(p, n);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::branch && e.kind() != ErrorKind::axis_proximity) throw;
      ++undefined_prism;
      continue;
    }
    const SpherePoint& w = img.point.z();
    bool ok;
    if (img.branch == Branch::critical) {
      int y = atlas.node(img.owner).image;
      double a = field.depth(n - 1, w), bb = field.depth(n, w);
      ok = std::abs(atlas.chart_value(y, w)) <= atlas.radius(y, n - 1) * (1.0 + 1e-9) &&
           img.point.depth() <= std::max(a, bb) * (1.0 + 1e-12) &&
           img.point.depth() >= std::min(a, bb) * (1.0 - 1e-12);
    } else {
      double a = field.depth(n - 1, w), bb = field.depth(m - 1, w);
      ok = img.point.depth() <= std::max(a, bb) * (1.0 + 1e-12) &&
           img.point.depth() >= std::min(a, bb) * (1.0 - 1e-12);
    }
    ++in_prism;
    if (!ok) ++violations;
  }
  check(r, violations == 0, "prism_membership");

  auto mesh = mesh_sphere(field, dom.N0(), 3);
  check(r, mesh.euler_characteristic() == 2, "mesh_topology");
  r.aggregate = {{"outside_omega", outside},
                 {"sphere_samples", on_sphere},
                 {"sphere_undefined", undefined_sphere},
                 {"max_radial_error", worst},
                 {"prism_samples", in_prism},
                 {"prism_undefined", undefined_prism},
                 {"prism_violations", violations},
                 {"mesh_euler", mesh.euler_characteristic()}};
  return finish(r);
}

// Spherical Koebe constants for shrinking balls around the point of a small
// candidate set that lies farthest from the critical points.
SuiteResult suite_koebe(const JobConfig& c, const Built& b) {
  SuiteResult r;
  r.suite = "koebe";
  const RationalFunction& f = b.family->map();
  auto crit = find_critical_points(f);
  std::mt19937_64 rng(c.seed);
  SpherePoint z0;
  double best = -1.0;
  for (int i = 0; i < 64; ++i) {
    SpherePoint z = random_point(rng);
    double d = std::numeric_limits<double>::infinity();
    for (auto& cd : crit) d = std::min(d, sph_dist(z, cd.c));
    if (d > best) {
      best = d;
      z0 = z;
    }
  }
  // Largest R = best / 2^k meeting the preconditions (univalence, image in a
  // hemisphere) for the outer ball.
  double R = 0.5 * best;
  std::vector<double> c2;
  for (int attempt = 0;; ++attempt) {
    try {
      koebe_check(f, z0, 0.5 * R, R, 200, c.seed);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::domain || attempt > 20) throw;
      R *= 0.5;
    }
  }
  for (double ratio : {0.5, 0.25, 0.125}) {
    auto k = koebe_check(f, z0, ratio * R, R, 2000, c.seed);
    r.per_sample.push_back({{"r_over_R", ratio}, {"c1", k.c1}, {"c2", k.c2}, {"sharp_ratio", k.sharp_ratio}});
    c2.push_back(k.c2);
    check(r, k.c1 <= 1.0 + 1e-12 && k.c2 >= 1.0 - 1e-12, "constants_bracket_one[" + std::to_string(ratio) + "]");
  }
  check(r, c2[0] > c2[1] && c2[1] > c2[2], "c2_decreasing");
  r.aggregate = {{"center", format_point(z0)}, {"R_outer", R}, {"c2", c2}};
  return finish(r);
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"winding",     "coordinates", "derivative",
                                              "growth",      "radii",       "scaling",
                                              "consecutive", "continuity",  "distortion",
                                              "spheres",     "koebe"};
  return names;
}

std::vector<std::string> expand_suites(const std::vector<std::string>& requested) {
  std::vector<std::string> out;
  for (auto& s : requested) {
    if (s == "all") {
      for (auto& n : suite_names())
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
      continue;
    }
    if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end())
      fail(ErrorKind::config, "unknown suite " + s);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) fail(ErrorKind::config, "no suite selected");
  return out;
}

SuiteResult run_suite(const std::string& name, const JobConfig& c, const Built& b) {
  if (name == "winding") return suite_winding(c);
  if (name == "coordinates") return suite_coordinates(c, b);
  if (name == "derivative") return suite_derivative(c, b);
  if (name == "growth") return suite_growth(c, b);
  if (name == "radii") return suite_radii(c, b);
  if (name == "scaling") return suite_scaling(c, b);
  if (name == "consecutive") return suite_consecutive(c, b);
  if (name == "continuity") return suite_continuity(c, b);
  if (name == "distortion") return suite_distortion(c, b);
  if (name == "spheres") return suite_spheres(c, b);
  if (name == "koebe") return suite_koebe(c, b);
  fail(ErrorKind::config, "unknown suite " + name);
}

}  // namespace qrx::pipeline
