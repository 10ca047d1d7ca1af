#include "qrx/coordinates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qrx/error.hpp"

namespace qrx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class T>
T ipow(const T& z, int d) {
  T acc = z;
  for (int k = 1; k < d; ++k) acc = acc * z;
  return acc;
}

template <class T>
T eval_series(const std::vector<cplx>& c, const T& z) {
  T acc = T(c.back());
  for (std::size_t i = c.size() - 1; i-- > 0;) acc = acc * z + c[i];
  return acc;
}

std::vector<cplx> truncated(const Poly& p, std::size_t n) {
  std::vector<cplx> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) out[k] = p[k];
  return out;
}

// 1 / limsup |c_m|^{1/m}, estimated over the upper two thirds of the terms.
double radius_estimate(const std::vector<cplx>& c) {
  std::size_t m0 = std::max<std::size_t>(2, c.size() / 3);
  double worst = 0.0;
  for (std::size_t m = m0; m < c.size(); ++m) {
    double a = std::abs(c[m]);
    if (a > 0.0) worst = std::max(worst, std::pow(a, 1.0 / static_cast<double>(m)));
  }
  return worst > 0.0 ? 1.0 / worst : 1e6;
}

}  // namespace

KoenigChart::KoenigChart(const RationalFunction& f, const std::vector<SpherePoint>& cycle,
                         double r0, KoenigSettings settings)
    : chart_(cycle.front()), r0_(r0), settings_(settings) {
  int k = static_cast<int>(cycle.size());
  lambda_ = 1.0;
  for (int i = 0; i < k; ++i) {
    steps_.emplace_back(f, cycle[i], cycle[(i + 1) % k]);
    if (steps_.back().order() != 1) fail(ErrorKind::config, "cycle contains a critical point");
    lambda_ *= steps_.back().leading();
  }
  if (!(std::abs(lambda_) > 1.0)) fail(ErrorKind::config, "cycle is not repelling");

  std::size_t n = static_cast<std::size_t>(settings_.terms) + 1;
  // Series of the local self-map G.
  std::vector<cplx> g(n, 0.0);
  g[1] = 1.0;
  for (auto& s : steps_) {
    auto step = series::divide(truncated(s.numerator(), n), truncated(s.denominator(), n));
    g = series::compose(Poly(step), g);
  }
  g[0] = 0.0;

  // Linearizer S with S(G(u)) = Lambda S(u), S(u) = u + ...
  std::vector<std::vector<cplx>> gpow(n);
  gpow[1] = g;
  for (std::size_t j = 2; j < n; ++j) gpow[j] = series::mul(gpow[j - 1], g);
  std::vector<cplx> b(n, 0.0);
  b[1] = 1.0;
  cplx lam_m = lambda_;
  for (std::size_t m = 2; m < n; ++m) {
    lam_m *= lambda_;
    cplx acc = 0.0;
    for (std::size_t j = 1; j < m; ++j) acc += b[j] * gpow[j][m];
    b[m] = acc / (lambda_ - lam_m);
  }
  s_ratio_.assign(b.begin() + 1, b.end());
  rho_s_ = radius_estimate(b);

  // Inverse P with P(Lambda w) = G(P(w)).
  std::vector<cplx> p(n, 0.0);
  p[1] = 1.0;
  lam_m = lambda_;
  for (std::size_t m = 2; m < n; ++m) {
    lam_m *= lambda_;
    std::vector<cplx> pw(m + 1, 0.0), base(p.begin(), p.begin() + m + 1);
    pw = base;
    cplx acc = 0.0;
    for (std::size_t j = 2; j <= m; ++j) {
      pw = series::mul(pw, base);
      acc += g[j] * pw[m];
    }
    p[m] = acc / (lam_m - lambda_);
  }
  p_ = p;
  rho_p_ = radius_estimate(p);
}

cplx KoenigChart::inverse_branch(cplx v) const {
  cplx u = v / lambda_;
  for (int it = 0; it < 60; ++it) {
    Jet j = self_map(Jet::variable(u));
    cplx step = (j.v - v) / j.d;
    if (!std::isfinite(std::abs(step))) break;
    u -= step;
    if (std::abs(step) <= 1e-16 * std::abs(u) || u == 0.0) {
      if (std::abs(u) >= std::abs(v) && v != 0.0)
        fail(ErrorKind::chart_domain, "inverse branch left the linearization domain");
      return u;
    }
  }
  fail(ErrorKind::chart_domain, "inverse-branch Newton iteration diverged");
}

namespace {

cplx branch_step(const KoenigChart& c, cplx v) { return c.inverse_branch(v); }

Jet branch_step(const KoenigChart& c, const Jet& v) {
  cplx u = c.inverse_branch(v.v);
  cplx slope = c.self_map(Jet::variable(u)).d;
  return {u, v.d / slope};
}

}  // namespace

template <class T>
T KoenigChart::raw_ratio(const T& u) const {
  double lim = settings_.theta * rho_s_;
  T v = u;
  cplx scale = 1.0;
  int k = 0;
  while (std::abs(value_of(v)) > lim) {
    if (++k > settings_.max_depth) fail(ErrorKind::chart_domain, "Koenig depth exhausted");
    v = branch_step(*this, v);
    scale *= lambda_;
  }
  T s = eval_series(s_ratio_, v);
  if (k == 0) return s;
  return scale * (v / u) * s;
}

cplx KoenigChart::ratio(cplx u) const { return raw_ratio(u) / r0_; }
Jet KoenigChart::ratio(const Jet& u) const { return raw_ratio(u) / cplx(r0_); }

cplx KoenigChart::inverse_local(cplx w) const {
  cplx x = w * r0_;
  double lim = settings_.theta * rho_p_;
  int k = 0;
  while (std::abs(x) > lim) {
    if (++k > settings_.max_depth) fail(ErrorKind::chart_domain, "Koenig depth exhausted");
    x /= lambda_;
  }
  cplx u = x * eval_series(std::vector<cplx>(p_.begin() + 1, p_.end()), x);
  for (int j = 0; j < k; ++j) u = self_map(u);
  return u;
}

cplx koenig_forward(const KoenigChart& chart, const SpherePoint& z) { return chart.forward(z); }
SpherePoint koenig_inverse(const KoenigChart& chart, cplx w) { return chart.inverse(w); }

KoebeFit koenig_koebe_fit(const KoenigChart& chart, double r, int radial, int angular) {
  double r0 = chart.r0();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  auto sharp = [&](cplx w_raw) {
    cplx u = chart.inverse_local(w_raw / r0);
    Jet j = chart.value(Jet::variable(u));
    double dpsi = std::abs(j.d) * r0;
    return 1.0 / (dpsi * chart.chart().scale(u));
  };
  double s0 = sharp(0.0);
  lo = hi = s0;
  for (int i = 1; i <= radial; ++i) {
    for (int a = 0; a < angular; ++a) {
      double s = sharp(std::polar(r * i / radial, kTwoPi * a / angular));
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  return {lo / hi, hi / lo};
}

RadiusChoice choose_chart_radius(const KoenigChart& chart, int d, double mu, int min_exponent) {
  double grow = std::pow(std::abs(chart.multiplier()), 1.0 / (chart.period() * d));
  RadiusChoice out;
  for (int e = 1; e <= -min_exponent; ++e) {
    double r = std::ldexp(1.0, -e);
    ++out.trials;
    KoebeFit fit;
    try {
      fit = koenig_koebe_fit(chart, r);
    } catch (const Error&) {
      continue;
    }
    if (fit.k1 * grow >= 1.0 + mu && grow > fit.k2) {
      out.r0 = r;
      out.fit = fit;
      return out;
    }
  }
  fail(ErrorKind::config, "no dyadic chart radius satisfies the Koebe conditions");
}

// ---------------------------------------------------------------------------

ChartAtlas::ChartAtlas(const RationalFunction& f, const OrbitSchedule& schedule,
                       const std::vector<double>& r0, AtlasSettings settings)
    : f_(std::make_shared<RationalFunction>(f)), schedule_(schedule), settings_(settings) {
  const auto& sn = schedule_.nodes;
  nodes_.resize(sn.size());
  for (std::size_t i = 0; i < sn.size(); ++i) {
    Node& n = nodes_[i];
    n.z = sn[i].z;
    n.chart = LocalChart(n.z);
    n.image = sn[i].image;
    n.degree = sn[i].local_degree;
    n.critical = sn[i].critical;
    n.postcritical = sn[i].postcritical;
    n.depth = sn[i].depth;
    n.degree_product = sn[i].degree_product;
    n.cycle = sn[sn[i].terminal].cycle;
    n.form = LocalForm(f, n.z, sn[n.image].z);
    if (n.form.order() != n.degree) fail(ErrorKind::numeric, "local degree mismatch in chart form");
  }

  for (std::size_t c = 0; c < schedule_.cycles.size(); ++c) {
    const Cycle& cyc = schedule_.cycles[c];
    std::vector<SpherePoint> pts;
    for (int id : cyc.nodes) pts.push_back(sn[id].z);
    koenig_.emplace_back(f, pts, r0.at(c), settings_.koenig);
    int k = cyc.period();
    double ll = std::log(std::abs(koenig_.back().multiplier())) / k;
    log_lambda_.push_back(ll);
    double level = 1.0;
    for (int i = 0; i < k; ++i) {
      nodes_[cyc.nodes[i]].cycle_pos = i;
      nodes_[cyc.nodes[i]].level0 = level;
      level *= std::abs(cyc.step_multipliers[i]) * std::exp(-ll);
    }
    for (int i = k - 1; i >= 1; --i) nodes_[cyc.nodes[i]].kappa = 1.0 / cyc.step_multipliers[i];
  }

  // Charts are defined recursively from the image, so set the base data in
  // order of increasing depth (and backwards along each cycle).
  std::vector<int> order;
  for (auto& cyc : schedule_.cycles)
    for (int i = cyc.period() - 1; i >= 1; --i) order.push_back(cyc.nodes[i]);
  int max_depth = 0;
  for (auto& n : nodes_) max_depth = std::max(max_depth, n.depth);
  for (int dep = 1; dep <= max_depth; ++dep)
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].depth == dep) order.push_back(static_cast<int>(i));
  for (auto& cyc : schedule_.cycles) nodes_[cyc.nodes[0]].ratio0 = koenig_[nodes_[cyc.nodes[0]].cycle].ratio(cplx(0.0));
  for (int x : order) {
    Node& n = nodes_[x];
    if (n.cycle_pos < 0) {
      n.level0 = std::pow(nodes_[sn[x].terminal].level0, 1.0 / n.degree_product);
      if (n.degree > 1) {
        n.g0 = n.form.leading() * nodes_[n.image].ratio0;
        n.root_base = principal_root(n.g0, n.degree);
      }
    }
    n.ratio0 = ratio_impl(x, cplx(0.0));
  }

  for (auto& kc : koenig_) {
    try {
      fits_.push_back(koenig_koebe_fit(kc, kc.r0()));
    } catch (const Error&) {
      fits_.push_back({0.0, std::numeric_limits<double>::infinity()});
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].umax = std::numeric_limits<double>::infinity();
    compute_bound(static_cast<int>(i));
  }
}

template <class T>
T ChartAtlas::ratio_impl(int x, const T& u) const {
  const Node& n = nodes_[x];
  if (n.cycle_pos == 0) return koenig_[n.cycle].ratio(u);
  T lr = n.form.ratio(u);
  T lu = ipow(u, n.degree) * lr;
  T prod = lr * ratio_impl(n.image, lu);
  if (n.cycle_pos > 0) return n.kappa * prod;
  if (n.degree == 1) return prod;
  return n.root_base * principal_root(prod / n.g0, n.degree);
}

template cplx ChartAtlas::ratio_impl<cplx>(int, const cplx&) const;
template Jet ChartAtlas::ratio_impl<Jet>(int, const Jet&) const;

std::vector<int> ChartAtlas::critical_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].critical) out.push_back(static_cast<int>(i));
  return out;
}

cplx ChartAtlas::chart_value(int x, const SpherePoint& z) const {
  return value(x, nodes_[x].chart.to_local(z));
}

std::optional<cplx> ChartAtlas::newton_local(int x, cplx w, cplx seed) const {
  cplx u = seed;
  double tol = 1e-13 * std::max(std::abs(w), nodes_[x].level0);
  try {
    for (int it = 0; it < 40; ++it) {
      Jet j = value(x, Jet::variable(u));
      cplx step = (j.v - w) / j.d;
      if (!std::isfinite(std::abs(step))) return std::nullopt;
      u -= step;
      if (std::abs(step) <= 1e-15 * (std::abs(u) + 1e-300)) break;
    }
    if (std::abs(value(x, u) - w) > tol) return std::nullopt;
  } catch (const Error&) {
    return std::nullopt;
  }
  if (std::abs(u) > nodes_[x].umax) return std::nullopt;
  return u;
}

std::optional<cplx> ChartAtlas::continue_local(int x, cplx w, int steps) const {
  cplx u = 0.0;
  for (int s = 1; s <= steps; ++s) {
    cplx ws = w * (static_cast<double>(s) / steps);
    cplx seed = s == 1 ? ws / nodes_[x].ratio0 : u;
    auto r = newton_local(x, ws, seed);
    if (!r) return std::nullopt;
    u = *r;
  }
  return u;
}

cplx ChartAtlas::inverse_local(int x, cplx w) const {
  const Node& n = nodes_[x];
  if (n.cycle_pos == 0) return koenig_[n.cycle].inverse_local(w);
  if (w == 0.0) return 0.0;
  if (auto r = newton_local(x, w, w / n.ratio0)) return *r;
  for (int steps : {8, 64}) {
    if (auto r = continue_local(x, w, steps)) return *r;
  }
  fail(ErrorKind::chart_domain, "chart inverse did not converge");
}

SpherePoint ChartAtlas::inverse(int x, cplx w) const {
  return nodes_[x].chart.from_local(inverse_local(x, w));
}

double ChartAtlas::chart_sharp(int x, cplx u) const {
  Jet j = value(x, Jet::variable(u));
  return nodes_[x].chart.scale(u) * std::abs(j.d);
}

double ChartAtlas::radius(int x, int n) const {
  const Node& nd = nodes_[x];
  int e = n - nd.depth;
  if (nd.cycle_pos < 0) e = std::max(e, 0);
  return nd.level0 * std::exp(-e * log_lambda_[nd.cycle] / nd.degree_product);
}

int ChartAtlas::level_of(int x, double abs_w) const {
  if (abs_w > radius(x, 0)) return -1;
  const Node& nd = nodes_[x];
  if (abs_w == 0.0) return settings_.n_max;
  // Solve radius(x, n) >= abs_w for the largest n, then correct rounding.
  double ll = log_lambda_[nd.cycle] / nd.degree_product;
  int n = static_cast<int>(std::floor(std::log(nd.level0 / abs_w) / ll)) + nd.depth;
  n = std::max(n, 0);
  while (n > 0 && radius(x, n) < abs_w) --n;
  while (n < settings_.n_max && radius(x, n + 1) >= abs_w) ++n;
  return std::min(n, settings_.n_max);
}

ChartAtlas::Membership ChartAtlas::locate(const SpherePoint& z) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (sph_dist(z, n.z) > n.bound) continue;
    int x = static_cast<int>(i);
    try {
      cplx u = n.chart.to_local(z);
      if (std::abs(u) > n.umax) continue;
      cplx w = value(x, u);
      if (std::abs(w) > n.level0) continue;
      cplx back = inverse_local(x, w);
      if (std::abs(back - u) > 1e-8 * std::max(std::abs(u), n.umax)) continue;
      return {x, u, w, level_of(x, std::abs(w))};
    } catch (const Error&) {
      continue;
    }
  }
  return {};
}

bool ChartAtlas::in_component(int x, const SpherePoint& z, double tol) const {
  const Node& n = nodes_[x];
  if (sph_dist(z, n.z) > n.bound) return false;
  try {
    cplx u = n.chart.to_local(z);
    cplx w = value(x, u);
    if (std::abs(w) > n.level0 * (1.0 + 1e-12)) return false;
    return sph_dist(inverse(x, w), z) <= tol;
  } catch (const Error&) {
    return false;
  }
}

SpherePoint ChartAtlas::sample(int x, int n, double a, double b) const {
  return inverse(x, std::polar(radius(x, n) * std::sqrt(a), kTwoPi * b));
}

void ChartAtlas::compute_bound(int x) {
  Node& n = nodes_[x];
  constexpr int kAngles = 128, kSteps = 16;
  double dist = 0.0, umax = 0.0;
  try {
    for (int a = 0; a < kAngles; ++a) {
      cplx dir = std::polar(n.level0, kTwoPi * a / kAngles);
      cplx u = 0.0;
      for (int s = 1; s <= kSteps; ++s) {
        cplx w = dir * (static_cast<double>(s) / kSteps);
        if (n.cycle_pos == 0) {
          u = koenig_[n.cycle].inverse_local(w);
        } else {
          auto r = newton_local(x, w, s == 1 ? w / n.ratio0 : u);
          if (!r) throw Error(ErrorKind::chart_domain, "continuation failed");
          u = *r;
        }
      }
      umax = std::max(umax, std::abs(u));
      dist = std::max(dist, sph_dist(n.chart.from_local(u), n.z));
    }
  } catch (const Error&) {
    n.bound = std::numeric_limits<double>::infinity();
    n.umax = std::numeric_limits<double>::infinity();
    return;
  }
  n.bound = 1.1 * dist + 1e-12;
  n.umax = 1.2 * umax;
}

std::vector<ChartAtlas::Issue> ChartAtlas::validate() const {
  std::vector<Issue> issues;
  for (std::size_t c = 0; c < koenig_.size(); ++c) {
    int dmax = 1;
    for (auto& n : nodes_)
      if (n.critical && n.cycle == static_cast<int>(c)) dmax = std::max(dmax, n.degree_product);
    double grow = std::exp(log_lambda_[c] / dmax);
    if (!(fits_[c].k1 * grow >= 1.0 + settings_.mu && grow > fits_[c].k2))
      issues.push_back({static_cast<int>(c), -1, "Koebe conditions fail"});
  }
  constexpr int kAngles = 48, kSteps = 12;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    int x = static_cast<int>(i);
    if (!std::isfinite(n.bound)) {
      issues.push_back({n.cycle, x, "chart inverse fails on U^0"});
      continue;
    }
    if (n.bound > 0.5 * std::numbers::pi) {
      issues.push_back({n.cycle, x, "U^0 too large"});
      continue;
    }
    bool bad = false;
    for (int a = 0; a < kAngles && !bad; ++a) {
      cplx dir = std::polar(n.level0, kTwoPi * a / kAngles);
      cplx prev = 0.0;
      for (int s = 1; s <= kSteps && !bad; ++s) {
        cplx w = dir * (static_cast<double>(s) / kSteps);
        cplx u;
        try {
          u = inverse_local(x, w);
        } catch (const Error&) {
          bad = true;
          break;
        }
        // Ray continuation must agree with the direct inverse.
        if (n.cycle_pos != 0) {
          auto r = newton_local(x, w, s == 1 ? w / n.ratio0 : prev);
          if (!r || std::abs(*r - u) > 1e-9 * n.umax) bad = true;
        }
        if (n.cycle_pos < 0 && n.degree > 1) {
          cplx lr = n.form.ratio(u);
          cplx q = lr * ratio_impl(n.image, ipow(u, n.degree) * lr) / n.g0;
          if (!(q.real() > 0.0)) bad = true;
        }
        prev = u;
      }
    }
    if (bad) issues.push_back({n.cycle, x, "branch or continuation failure on U^0"});
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
      const Node& a = nodes_[i];
      const Node& b = nodes_[j];
      if (sph_dist(a.z, b.z) <= a.bound + b.bound) {
        issues.push_back({a.cycle, static_cast<int>(i), "U^0 sets overlap"});
        if (b.cycle != a.cycle) issues.push_back({b.cycle, static_cast<int>(j), "U^0 sets overlap"});
      }
    }
  }
  return issues;
}

ChartAtlas ChartAtlas::build(const RationalFunction& f, const OrbitSchedule& schedule,
                             AtlasSettings settings) {
  if (!schedule.expanding) fail(ErrorKind::config, "map is not expanding");
  if (!schedule.repelling) fail(ErrorKind::config, "postcritical cycle is not repelling");
  std::vector<double> r0;
  for (std::size_t c = 0; c < schedule.cycles.size(); ++c) {
    const Cycle& cyc = schedule.cycles[c];
    std::vector<SpherePoint> pts;
    for (int id : cyc.nodes) pts.push_back(schedule.nodes[id].z);
    KoenigChart probe(f, pts, 0.5, settings.koenig);
    int dmax = 1;
    for (auto& n : schedule.nodes)
      if (n.critical && schedule.nodes[n.terminal].cycle == static_cast<int>(c))
        dmax = std::max(dmax, n.degree_product);
    r0.push_back(choose_chart_radius(probe, dmax, settings.mu, settings.min_exponent).r0);
  }
  double floor = std::ldexp(1.0, settings.min_exponent);
  for (;;) {
    ChartAtlas atlas(f, schedule, r0, settings);
    auto issues = atlas.validate();
    if (issues.empty()) return atlas;
    std::vector<bool> halve(r0.size(), false);
    for (auto& is : issues)
      if (is.cycle >= 0) halve[is.cycle] = true;
    for (std::size_t c = 0; c < r0.size(); ++c) {
      if (!halve[c]) continue;
      r0[c] *= 0.5;
      if (r0[c] < floor)
        fail(ErrorKind::config, "chart radius fell below the minimum: " + issues.front().what);
    }
  }
}

OwnerLevel neighborhood_level(const ChartAtlas& atlas, const SpherePoint& z) {
  auto m = atlas.locate(z);
  return {m.node, m.level};
}

cplx critical_phi(const ChartAtlas& atlas, int c, const SpherePoint& z) {
  return atlas.chart_value(c, z);
}

namespace {

cplx random_in_disk(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::polar(r * std::sqrt(u(rng)), kTwoPi * u(rng));
}

}  // namespace

ResidualReport koenig_residual(const ChartAtlas& atlas, int node, std::size_t samples,
                               std::uint64_t seed) {
  const auto& n = atlas.node(node);
  if (n.cycle_pos < 0) fail(ErrorKind::domain, "Koenig residual requested off a cycle");
  const Cycle& cyc = atlas.schedule().cycles[n.cycle];
  cplx lambda = cyc.step_multipliers[n.cycle_pos];
  std::mt19937_64 rng(seed);
  ResidualReport rep;
  for (std::size_t i = 0; i < samples; ++i) {
    cplx w = random_in_disk(rng, atlas.radius(node, 1));
    SpherePoint z = atlas.inverse(node, w);
    SpherePoint fz = atlas.map()(z);
    double r = std::abs(atlas.chart_value(n.image, fz) - lambda * atlas.chart_value(node, z));
    rep.max_residual = std::max(rep.max_residual, r);
    ++rep.samples;
  }
  return rep;
}

ResidualReport diagram_residual(const ChartAtlas& atlas, int node, std::size_t samples,
                                std::uint64_t seed) {
  const auto& n = atlas.node(node);
  std::mt19937_64 rng(seed);
  ResidualReport rep;
  for (std::size_t i = 0; i < samples; ++i) {
    cplx w = random_in_disk(rng, atlas.radius(node, 1));
    SpherePoint z = atlas.inverse(node, w);
    SpherePoint fz = atlas.map()(z);
    cplx phi = atlas.chart_value(node, z);
    double r = std::abs(atlas.chart_value(n.image, fz) - ipow(phi, n.degree));
    rep.max_residual = std::max(rep.max_residual, r);
    ++rep.samples;
  }
  return rep;
}

}  // namespace qrx
