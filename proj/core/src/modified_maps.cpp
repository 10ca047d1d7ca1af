#include "qrx/modified_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrx/error.hpp"
#include "parallel.hpp"
#include "qrx/winding.hpp"

namespace qrx {

std::vector<int> CompositionTrace::winding_indices() const {
  std::vector<int> out;
  for (auto& s : steps)
    if (s.winding) out.push_back(s.index);
  return out;
}

std::optional<int> CompositionTrace::k() const {
  auto w = winding_indices();
  if (w.empty()) return std::nullopt;
  return w.front() - 1;
}

ModifiedMapFamily::ModifiedMapFamily(ChartAtlas atlas, int n_max)
    : atlas_(std::move(atlas)), n_max_(n_max), period_(atlas_.schedule().max_period) {
  if (atlas_.critical_nodes().size() != [&] {
        std::size_t k = 0;
        for (auto& n : atlas_.schedule().nodes) k += n.critical;
        return k;
      }())
    fail(ErrorKind::config, "a critical point has no chart");
}

void ModifiedMapFamily::set_interpolation_period(int k) {
  if (k < 1) fail(ErrorKind::config, "interpolation period must be positive");
  period_ = k;
}

int ModifiedMapFamily::critical_owner(int n, const SpherePoint& z, cplx* chart_value) const {
  auto m = atlas_.locate(z);
  if (m.node < 0) return -1;
  const auto& node = atlas_.node(m.node);
  if (node.degree < 2 || m.level < n) return -1;
  if (chart_value) *chart_value = m.w;
  return m.node;
}

MapStep ModifiedMapFamily::step(int n, const SpherePoint& z) const {
  if (n < 1) fail(ErrorKind::domain, "modified maps are indexed from 1");
  cplx w;
  int c = critical_owner(n, z, &w);
  if (c < 0) return {map()(z), map().sph_derivative(z), -1, false};
  const auto& node = atlas_.node(c);
  double rho = atlas_.radius(c, n);
  cplx wy = winding_rescaled(node.degree, rho, w);
  cplx uy = atlas_.inverse_local(node.image, wy);
  const auto& target = atlas_.node(node.image);
  double h = winding_rescaled_norms(node.degree, rho, w).max_expansion;
  double norm = h * atlas_.chart_sharp(c, node.chart.to_local(z)) / atlas_.chart_sharp(node.image, uy);
  return {target.chart.from_local(uy), norm, c, true};
}

CompositionTrace ModifiedMapFamily::compose(int n, const SpherePoint& z) const {
  if (n > n_max_ + period_) fail(ErrorKind::config, "composition index exceeds n_max");
  CompositionTrace tr;
  tr.n = n;
  SpherePoint cur = z;
  for (int m = n; m >= 1; --m) {
    MapStep s = step(m, cur);
    tr.steps.push_back({cur, m, s.owner, s.winding, s.norm});
    tr.norm *= s.norm;
    cur = s.image;
  }
  tr.result = cur;
  return tr;
}

std::vector<double> ModifiedMapFamily::compose_norms(const SpherePoint& z, int lo, int hi) const {
  if (lo < 0 || hi < lo) fail(ErrorKind::domain, "invalid composition index range");
  if (hi > n_max_ + period_) fail(ErrorKind::config, "composition index exceeds n_max");
  struct Plain {
    SpherePoint z;
    double sharp;
    int owner, level;
  };
  std::vector<Plain> orbit;
  orbit.reserve(hi);
  SpherePoint cur = z;
  for (int j = 0; j < hi; ++j) {
    auto m = atlas_.locate(cur);
    bool crit = m.node >= 0 && atlas_.node(m.node).degree >= 2;
    orbit.push_back({cur, map().sph_derivative(cur), crit ? m.node : -1, m.level});
    if (j + 1 < hi) cur = map()(cur);
  }
  std::vector<double> out;
  out.reserve(hi - lo + 1);
  for (int n = lo; n <= hi; ++n) {
    double norm = 1.0;
    int j = 0;
    for (; j < n; ++j) {
      const Plain& p = orbit[j];
      if (p.owner >= 0 && p.level >= n - j) break;
      norm *= p.sharp;
    }
    if (j < n) {
      SpherePoint w = orbit[j].z;
      for (int m = n - j; m >= 1; --m) {
        MapStep s = step(m, w);
        norm *= s.norm;
        w = s.image;
      }
    }
    out.push_back(norm);
  }
  return out;
}

std::vector<double> ModifiedMapFamily::schedule_norms(const SpherePoint& z, int lo, int hi) const {
  int k = period_;
  if (k == 1) return compose_norms(z, lo, hi);
  int base = (lo / k) * k, top = (hi / k + 1) * k;
  auto all = compose_norms(z, base, top);
  std::vector<double> out;
  for (int n = lo; n <= hi; ++n) {
    int m = n / k, j = n % k;
    if (j == 0) {
      out.push_back(all[n - base]);
      continue;
    }
    double a = m == 0 ? 1.0 : all[k * m - base];
    out.push_back(geometric_interpolation(a, all[k * (m + 1) - base], j, k));
  }
  return out;
}

SpherePoint modified_eval(const ModifiedMapFamily& family, int n, const SpherePoint& z) {
  return family.eval(n, z);
}

std::pair<SpherePoint, CompositionTrace> compose_eval(const ModifiedMapFamily& family, int n,
                                                      const SpherePoint& z) {
  auto tr = family.compose(n, z);
  return {tr.result, tr};
}

double compose_norm(const ModifiedMapFamily& family, int n, const SpherePoint& z) {
  return family.compose(n, z).norm;
}

std::vector<double> min_norm_growth(const ModifiedMapFamily& family,
                                    const std::vector<SpherePoint>& grid, int n_max) {
  std::vector<double> out(n_max + 1, std::numeric_limits<double>::infinity());
  std::vector<std::vector<double>> per(grid.size());
  detail::parallel_for(grid.size(), [&](std::size_t i) {
    per[i] = family.schedule_norms(grid[i], 0, n_max);
  });
  for (auto& row : per)
    for (int n = 1; n <= n_max; ++n) out[n] = std::min(out[n], row[n]);
  return out;
}

double geometric_interpolation(double d_m, double d_m1, int j, int k) {
  if (j == 0) return d_m;
  if (j == k) return d_m1;
  return d_m * std::pow(d_m1 / d_m, static_cast<double>(j) / k);
}

ScheduleValue schedule_compose(const ModifiedMapFamily& family, int n, const SpherePoint& z) {
  int k = family.interpolation_period();
  auto tr = family.compose(n, z);
  if (k == 1 || n % k == 0) return {tr.result, tr.norm};
  int m = n / k, j = n % k;
  double lo = m == 0 ? 1.0 : family.compose(k * m, z).norm;
  double hi = family.compose(k * (m + 1), z).norm;
  return {tr.result, geometric_interpolation(lo, hi, j, k)};
}

}  // namespace qrx
