#include "qrx/spheres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "parallel.hpp"
#include "qrx/error.hpp"

namespace qrx {

Icosphere icosphere(int level) {
  if (level < 0) fail(ErrorKind::config, "icosphere level must be non-negative");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere m;
  for (auto v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t),
                 Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1),
                 Vec3(-t, 0, -1), Vec3(-t, 0, 1)})
    m.vertices.push_back(v.normalized());
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      int id = static_cast<int>(m.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (auto& f : m.faces) {
      int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  return m;
}

std::vector<SpherePoint> analysis_grid(const ModifiedMapFamily& family, int level) {
  std::vector<SpherePoint> out;
  for (auto& v : icosphere(level).vertices) out.push_back(SpherePoint::from_unit_vector(v));
  for (int c : family.atlas().critical_nodes()) out.push_back(family.atlas().node(c).z);
  return out;
}

SCalibration calibrate_s(const ModifiedMapFamily& family, const std::vector<SpherePoint>& grid,
                         int n_max, double safety) {
  SCalibration cal;
  cal.min_norms = min_norm_growth(family, grid, n_max);
  if (!(cal.min_norms[n_max] > 1.0))
    fail(ErrorKind::growth, "composition norms do not exceed 1 by n_max");
  for (int n = 1; n <= n_max; ++n)
    if (!(cal.min_norms[n] > 1.0)) cal.threshold_index = n;
  double lowest = *std::min_element(cal.min_norms.begin() + 1, cal.min_norms.end());
  if (!(lowest > 0.0)) fail(ErrorKind::growth, "composition norm vanishes on the grid");
  if (cal.threshold_index == 0) {
    cal.s = 1.0;
  } else {
    double m = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= cal.threshold_index; ++n) m = std::min(m, cal.min_norms[n]);
    cal.s = safety * m;
  }
  cal.r0 = 0.5 * (1.0 - cal.s / lowest);
  return cal;
}

RadiusField::RadiusField(std::shared_ptr<const ModifiedMapFamily> family, double s, double r0,
                         int window)
    : family_(std::move(family)), s_(s), r0_(r0), window_(window) {
  if (!(s_ > 0.0 && s_ <= 1.0)) fail(ErrorKind::config, "scale constant s must lie in (0, 1]");
  if (!(r0_ > 0.0 && r0_ < 1.0)) fail(ErrorKind::config, "r_0 must lie in (0, 1)");
  if (window_ < 1) fail(ErrorKind::config, "consecutive-index window must be positive");
}

RadiusField RadiusField::calibrate(std::shared_ptr<const ModifiedMapFamily> family,
                                   const std::vector<SpherePoint>& grid, int window,
                                   double safety) {
  auto cal = calibrate_s(*family, grid, family->n_max(), safety);
  return RadiusField(std::move(family), cal.s, cal.r0, window);
}

double RadiusField::norm(int n, const SpherePoint& z) const {
  if (n == 0) return 1.0;
  return schedule_compose(*family_, n, z).norm;
}

double RadiusField::depth(int n, const SpherePoint& z) const {
  if (n < 0 || n > n_max()) fail(ErrorKind::domain, "radius index outside [0, n_max]");
  if (n == 0) return 1.0 - r0_;
  return s_ / norm(n, z);
}

std::vector<double> RadiusField::depths(const SpherePoint& z, int lo, int hi) const {
  lo = std::max(lo, 0);
  hi = std::min(hi, n_max());
  if (hi < lo) return {};
  auto norms = family_->schedule_norms(z, lo, hi);
  std::vector<double> out;
  for (int j = lo; j <= hi; ++j) out.push_back(j == 0 ? 1.0 - r0_ : s_ / norms[j - lo]);
  return out;
}

int consecutive_from_depths(const std::vector<double>& depths, int lo, int n) {
  double dn = depths.at(n - lo);
  int best = -1;
  double best_depth = -1.0;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    int j = lo + static_cast<int>(i);
    if (j == n || !(depths[i] < dn)) continue;
    double tie = 1e-12 * std::max(depths[i], best_depth);
    if (best < 0 || depths[i] > best_depth + tie) {
      best = j;
      best_depth = depths[i];
    }
  }
  return best;
}

int RadiusField::consecutive_index(int n, const SpherePoint& z) const {
  int lo = std::max(0, n - window_);
  auto d = depths(z, lo, n + window_);
  int m = consecutive_from_depths(d, lo, n);
  if (m < 0) fail(ErrorKind::window, "no consecutive index in the window; raise the window");
  return m;
}

std::pair<double, double> radius_and_distance(const RadiusField& field, int n,
                                              const SpherePoint& z) {
  double d = field.depth(n, z);
  return {1.0 - d, d};
}

int consecutive_index(const RadiusField& field, int n, const SpherePoint& z) {
  return field.consecutive_index(n, z);
}

double rho_depth(const RadiusField& field, const PrismCoords& c) {
  double dn = field.depth(c.n, c.z), dm = field.depth(c.m, c.z);
  return (c.q - c.t) / c.q * dn + c.t / c.q * dm;
}

double rho_interp(const RadiusField& field, const PrismCoords& c) {
  return 1.0 - rho_depth(field, c);
}

int compute_N0(const std::vector<std::vector<double>>& radii, double margin) {
  for (std::size_t n = 2; n < radii.size(); ++n) {
    bool ok = true;
    for (std::size_t i = 0; i < radii[1].size() && ok; ++i)
      ok = radii[n][i] > radii[1][i] + margin;
    if (ok) return static_cast<int>(n);
  }
  fail(ErrorKind::window, "no N0 found within n_max");
}

int compute_N0(const RadiusField& field, const std::vector<SpherePoint>& grid, double margin) {
  int n_max = field.n_max();
  std::vector<std::vector<double>> radii(n_max + 1, std::vector<double>(grid.size()));
  detail::parallel_for(grid.size(), [&](std::size_t i) {
    auto d = field.depths(grid[i], 1, n_max);
    for (int n = 1; n <= n_max; ++n) radii[n][i] = 1.0 - d[n - 1];
  });
  return compute_N0(radii, margin);
}

int ApproxSphereMesh::euler_characteristic() const {
  std::set<std::pair<int, int>> edges;
  for (auto& f : faces)
    for (int k = 0; k < 3; ++k) edges.insert(std::minmax(f[k], f[(k + 1) % 3]));
  return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(faces.size());
}

void ApproxSphereMesh::write_obj(std::ostream& out) const {
  out << "o S_" << n << "\n";
  out.precision(17);
  for (auto& v : vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << "\n";
  for (auto& f : faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << "\n";
}

ApproxSphereMesh mesh_sphere(const RadiusField& field, int n, int subdivision_level) {
  Icosphere ico = icosphere(subdivision_level);
  ApproxSphereMesh mesh;
  mesh.n = n;
  mesh.faces = ico.faces;
  mesh.radii.resize(ico.vertices.size());
  detail::parallel_for(ico.vertices.size(), [&](std::size_t i) {
    mesh.radii[i] = field.radius(n, SpherePoint::from_unit_vector(ico.vertices[i]));
  });
  for (std::size_t i = 0; i < ico.vertices.size(); ++i) mesh.vertices.push_back(mesh.radii[i] * ico.vertices[i]);
  return mesh;
}

MonotonicityReport critical_monotonicity_report(const RadiusField& field, int node, int n_lo,
                                                int n_hi, std::size_t samples_per_level,
                                                std::uint64_t seed, double ratio_bound) {
  const auto& atlas = field.family().atlas();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MonotonicityReport rep;
  rep.a = std::numeric_limits<double>::infinity();
  rep.b = -std::numeric_limits<double>::infinity();
  for (int n = n_lo; n <= n_hi; ++n) {
    for (std::size_t i = 0; i < samples_per_level; ++i) {
      SpherePoint z = atlas.sample(node, n, u(rng), u(rng));
      double dn = field.depth(n, z), dn1 = field.depth(n + 1, z);
      double ratio = (dn - dn1) / dn;
      rep.a = std::min(rep.a, ratio);
      rep.b = std::max(rep.b, ratio);
      if (!(dn1 < dn)) ++rep.violations;
      ++rep.samples;
    }
  }
  rep.pass = rep.violations == 0 && rep.a > 0.0 && rep.b / rep.a < ratio_bound;
  return rep;
}

}  // namespace qrx
