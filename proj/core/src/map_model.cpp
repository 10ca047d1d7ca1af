#include "qrx/map_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "qrx/error.hpp"

namespace qrx {

std::vector<CriticalDatum> find_critical_points(const RationalFunction& f) {
  int d = f.degree();
  const Poly& p = f.numerator();
  const Poly& q = f.denominator();
  Poly w = (p.derivative() * q - p * q.derivative()).trimmed(1e-13);
  int dw = w.degree();
  std::vector<cplx> roots = poly_roots(w);

  // Cluster numerically repeated roots; a root of multiplicity m carries an
  // error of order eps^(1/m).
  std::vector<int> group(roots.size(), -1);
  std::vector<std::vector<cplx>> clusters;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (group[i] >= 0) continue;
    group[i] = static_cast<int>(clusters.size());
    clusters.push_back({roots[i]});
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (group[j] < 0 && std::abs(roots[j] - roots[i]) < 1e-5 * (1.0 + std::abs(roots[i]))) {
        group[j] = group[i];
        clusters.back().push_back(roots[j]);
      }
    }
  }
  std::vector<CriticalDatum> out;
  int count = 0;
  for (auto& c : clusters) {
    cplx mean = std::accumulate(c.begin(), c.end(), cplx(0.0)) / static_cast<double>(c.size());
    if (std::abs(mean.imag()) < 1e-13 * (1.0 + std::abs(mean))) mean.imag(0.0);
    if (std::abs(mean.real()) < 1e-13 * (1.0 + std::abs(mean))) mean.real(0.0);
    int m = static_cast<int>(c.size());
    out.push_back({SpherePoint(mean), m + 1});
    count += m;
  }
  int at_infinity = (2 * d - 2) - std::max(dw, 0);
  if (dw < 0) at_infinity = 0;
  if (at_infinity > 0) {
    out.push_back({SpherePoint::infinity(), at_infinity + 1});
    count += at_infinity;
  }
  if (dw >= 0 && count != 2 * d - 2)
    fail(ErrorKind::numeric, "critical point count violates Riemann-Hurwitz");
  return out;
}

cplx multiplier(const RationalFunction& f, const SpherePoint& p, double tol) {
  if (sph_dist(f(p), p) > tol) fail(ErrorKind::domain, "multiplier requested at a non-fixed point");
  LocalForm form(f, p, p);
  return form.order() == 1 ? form.leading() : cplx(0.0);
}

const char* to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::fixed_value: return "fixed-value";
    case CaseTag::chain: return "chain";
    case CaseTag::periodic_cycle: return "periodic-cycle";
    case CaseTag::chained_critical: return "chained-critical";
  }
  return "unknown";
}

int OrbitSchedule::find(const SpherePoint& z, double tol) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (sph_dist(nodes[i].z, z) <= tol) return static_cast<int>(i);
  return -1;
}

namespace {

int tag_rank(CaseTag t) {
  switch (t) {
    case CaseTag::fixed_value: return 0;
    case CaseTag::chained_critical: return 1;
    case CaseTag::chain: return 2;
    case CaseTag::periodic_cycle: return 3;
  }
  return 0;
}

}  // namespace

OrbitSchedule classify_postcritical(const RationalFunction& f,
                                    const std::vector<CriticalDatum>& crit, double tol,
                                    int max_steps) {
  OrbitSchedule s;
  for (auto& c : crit) {
    OrbitNode n;
    n.z = c.c;
    n.critical = true;
    n.local_degree = c.local_degree;
    s.nodes.push_back(n);
  }
  for (std::size_t ci = 0; ci < crit.size(); ++ci) {
    int cur = static_cast<int>(ci);
    int steps = 0;
    while (s.nodes[cur].image < 0) {
      SpherePoint img = f(s.nodes[cur].z);
      int j = s.find(img, tol);
      if (j < 0) {
        OrbitNode n;
        n.z = img;
        s.nodes.push_back(n);
        j = static_cast<int>(s.nodes.size()) - 1;
      }
      s.nodes[j].postcritical = true;
      s.nodes[cur].image = j;
      cur = j;
      if (++steps > max_steps)
        fail(ErrorKind::classification,
             "critical orbit did not close within max_steps; map is not postcritically finite "
             "at this tolerance");
    }
  }

  // Cycles.
  std::vector<int> state(s.nodes.size(), 0);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    if (state[i]) continue;
    std::vector<int> walk;
    int cur = static_cast<int>(i);
    while (state[cur] == 0) {
      state[cur] = 1;
      walk.push_back(cur);
      cur = s.nodes[cur].image;
    }
    if (state[cur] == 1) {
      Cycle cyc;
      auto it = std::find(walk.begin(), walk.end(), cur);
      cyc.nodes.assign(it, walk.end());
      int idx = static_cast<int>(s.cycles.size());
      cyc.multiplier = 1.0;
      for (std::size_t k = 0; k < cyc.nodes.size(); ++k) {
        int a = cyc.nodes[k], b = cyc.nodes[(k + 1) % cyc.nodes.size()];
        s.nodes[a].cycle = idx;
        if (s.nodes[a].critical) cyc.contains_critical = true;
        LocalForm form(f, s.nodes[a].z, s.nodes[b].z);
        cplx m = form.order() == 1 ? form.leading() : cplx(0.0);
        cyc.step_multipliers.push_back(m);
        cyc.multiplier *= m;
      }
      s.cycles.push_back(cyc);
    }
    for (int w : walk) state[w] = 2;
  }

  for (auto& n : s.nodes) {
    int cur = static_cast<int>(&n - s.nodes.data());
    n.depth = 0;
    n.degree_product = 1;
    while (s.nodes[cur].cycle < 0) {
      n.degree_product *= s.nodes[cur].local_degree;
      cur = s.nodes[cur].image;
      ++n.depth;
    }
    n.terminal = cur;
  }

  s.expanding = true;
  s.repelling = true;
  for (auto& c : s.cycles) {
    if (c.contains_critical) s.expanding = false;
    else if (!(std::abs(c.multiplier) > 1.0)) s.repelling = false;
    s.max_period = std::max(s.max_period, c.period());
  }

  s.tag = CaseTag::fixed_value;
  for (std::size_t ci = 0; ci < crit.size(); ++ci) {
    CriticalOrbit o;
    o.critical = static_cast<int>(ci);
    int cur = o.critical;
    o.path.push_back(cur);
    while (s.nodes[cur].cycle < 0) {
      cur = s.nodes[cur].image;
      o.path.push_back(cur);
    }
    o.legs = std::max(0, static_cast<int>(o.path.size()) - 2);
    bool all_critical = o.legs > 0;
    for (std::size_t k = 1; k + 1 < o.path.size(); ++k) {
      if (s.nodes[o.path[k]].critical) o.via_critical = true;
      else all_critical = false;
    }
    const Cycle& cyc = s.cycles[s.nodes[cur].cycle];
    if (cyc.period() > 1) o.tag = CaseTag::periodic_cycle;
    else if (o.legs == 0) o.tag = CaseTag::fixed_value;
    else if (all_critical) o.tag = CaseTag::chained_critical;
    else o.tag = CaseTag::chain;
    if (tag_rank(o.tag) > tag_rank(s.tag)) s.tag = o.tag;
    s.orbits.push_back(o);
  }
  return s;
}

std::string format_number(double x) {
  char buf[64];
  double r = std::round(x);
  if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) std::snprintf(buf, sizeof buf, "%.0f", std::abs(r));
  else std::snprintf(buf, sizeof buf, "%.6g", std::abs(x));
  std::string s(buf);
  if (x < 0 && s != "0") s = "−" + s;
  return s;
}

std::string format_point(const SpherePoint& z) {
  if (z.is_infinity()) return "∞";
  cplx v = z.value();
  double re = v.real(), im = v.imag();
  double scale = std::max(1.0, std::abs(v));
  bool has_re = std::abs(re) > 1e-9 * scale;
  bool has_im = std::abs(im) > 1e-9 * scale;
  if (!has_re && !has_im) return "0";
  std::string out;
  if (has_re) out = format_number(re);
  if (has_im) {
    std::string mag = format_number(std::abs(im));
    if (mag == "1") mag.clear();
    if (im < 0) out += "−";
    else if (has_re) out += "+";
    out += mag + "i";
  }
  return out;
}

std::string OrbitSchedule::describe() const {
  std::vector<std::string> parts;
  std::set<std::vector<int>> seen;
  for (auto& o : orbits) {
    bool is_suffix = false;
    for (auto& other : orbits) {
      if (&other == &o || other.path.size() <= o.path.size()) continue;
      if (std::equal(o.path.rbegin(), o.path.rend(), other.path.rbegin())) is_suffix = true;
    }
    if (is_suffix || !seen.insert(o.path).second) continue;
    std::string s;
    for (std::size_t k = 0; k < o.path.size(); ++k) {
      if (k) s += "→";
      s += format_point(nodes[o.path[k]].z);
    }
    const Cycle& c = cycles[nodes[o.path.back()].cycle];
    if (c.period() == 1) {
      s += " (fixed, |λ|=" + format_number(std::abs(c.multiplier)) + ")";
    } else {
      s += " (period " + std::to_string(c.period()) + ", |Λ|=" +
           format_number(std::abs(c.multiplier)) + ")";
    }
    parts.push_back(s);
  }
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? ", " : "") + parts[k];
  return out;
}

}  // namespace qrx
