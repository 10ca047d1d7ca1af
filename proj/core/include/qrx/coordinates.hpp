#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qrx/map_model.hpp"
#include "qrx/sphere.hpp"

namespace qrx {

struct KoenigSettings {
  int terms = 48;        // truncation order of the linearizing series
  double theta = 0.25;   // series used only on theta * (convergence radius)
  int max_depth = 60;    // cap on inverse-branch / forward iterations
};

// Linearizing coordinate at a repelling cycle p_0 -> ... -> p_{k-1} -> p_0,
// anchored at p_0. The raw coordinate has derivative 1 at p_0 in the local
// chart; the normalized coordinate is raw / r0, so U^0 = psi^{-1}(closed
// unit disk) = psi_raw^{-1}(r0 * closed unit disk).
class KoenigChart {
 public:
  KoenigChart() = default;
  KoenigChart(const RationalFunction& f, const std::vector<SpherePoint>& cycle, double r0,
              KoenigSettings settings = {});

  const SpherePoint& fixed_point() const { return chart_.center(); }
  const LocalChart& chart() const { return chart_; }
  cplx multiplier() const { return lambda_; }
  int period() const { return static_cast<int>(steps_.size()); }
  double r0() const { return r0_; }
  void set_r0(double r0) { r0_ = r0; }
  double series_radius() const { return rho_s_; }
  double inverse_series_radius() const { return rho_p_; }

  // Local self-map u -> loc(f^k(loc^{-1}(u))).
  template <class T>
  T self_map(const T& u) const {
    T x = u;
    for (auto& s : steps_) x = s(x);
    return x;
  }

  // psi(u) / u for the normalized coordinate, u a local coordinate at p_0.
  cplx ratio(cplx u) const;
  Jet ratio(const Jet& u) const;
  template <class T>
  T value(const T& u) const { return u * ratio(u); }

  // Local coordinate u with psi(u) = w (normalized w).
  cplx inverse_local(cplx w) const;

  cplx forward(const SpherePoint& z) const { return value(chart_.to_local(z)); }
  SpherePoint inverse(cplx w) const { return chart_.from_local(inverse_local(w)); }

  // Inverse branch of the local self-map fixing 0.
  cplx inverse_branch(cplx v) const;

 private:
  template <class T>
  T raw_ratio(const T& u) const;

  LocalChart chart_;
  std::vector<LocalForm> steps_;
  cplx lambda_{1.0};
  double r0_ = 0.5;
  KoenigSettings settings_;
  std::vector<cplx> s_ratio_;  // coefficients of S(u)/u
  std::vector<cplx> p_;        // coefficients of S^{-1}
  double rho_s_ = 1.0, rho_p_ = 1.0;
};

cplx koenig_forward(const KoenigChart& chart, const SpherePoint& z);
SpherePoint koenig_inverse(const KoenigChart& chart, cplx w);

struct KoebeFit {
  double k1 = 1.0;
  double k2 = 1.0;
};

// Fitted constants K1 = min, K2 = max of (psi_raw^{-1})^#(y) / (psi_raw^{-1})^#(x)
// over sample pairs in the raw disk of radius r.
KoebeFit koenig_koebe_fit(const KoenigChart& chart, double r, int radial = 8, int angular = 32);

struct RadiusChoice {
  double r0 = 0.0;
  KoebeFit fit;
  int trials = 0;
};

// Largest dyadic r0 in {1/2, 1/4, ...} satisfying K1 |lambda|^{1/d} >= 1 + mu
// and |lambda|^{1/d} > K2. For cycles of period k the exponent is 1/(k d).
RadiusChoice choose_chart_radius(const KoenigChart& chart, int d, double mu = 0.01,
                                 int min_exponent = -20);

struct AtlasSettings {
  double mu = 0.01;
  int min_exponent = -20;
  KoenigSettings koenig;
  int n_max = 64;  // cap on reported levels
};

// One chart per point of the critical/postcritical orbit tree. Cycle points
// carry linearizing coordinates; every other point x with image y carries
// chi_x with chi_x^{d_x} = chi_y o f, so that critical charts conjugate f to
// z^d. Level-n neighborhoods are U_x^n = {|chi_x| <= radius(x, n)}.
class ChartAtlas {
 public:
  struct Node {
    SpherePoint z;
    LocalChart chart;
    LocalForm form;  // f from the chart at z to the chart at its image
    int image = -1;
    int degree = 1;
    bool critical = false;
    bool postcritical = false;
    int cycle = -1;       // index of the terminal cycle for every node
    int cycle_pos = -1;   // position within its cycle, -1 off the cycle
    int depth = 0;
    int degree_product = 1;
    cplx kappa{1.0};      // extra factor on cycle points other than p_0
    double level0 = 1.0;  // radius of chi(U^0)
    cplx g0{1.0};         // base value of the d-th root argument
    cplx root_base{1.0};  // fixed d-th root of g0 (base ray)
    cplx ratio0{1.0};     // chi'(x) in the local chart
    double bound = 0.0;   // spherical radius of a ball containing U^0
    double umax = 0.0;    // bound on |u| over U^0 in the local chart
  };

  ChartAtlas() = default;
  // Builds charts for the given per-cycle raw radii (no validation).
  ChartAtlas(const RationalFunction& f, const OrbitSchedule& schedule,
             const std::vector<double>& r0, AtlasSettings settings = {});
  // Selects per-cycle radii by halving until every check passes.
  static ChartAtlas build(const RationalFunction& f, const OrbitSchedule& schedule,
                          AtlasSettings settings = {});

  const RationalFunction& map() const { return *f_; }
  const OrbitSchedule& schedule() const { return schedule_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[i]; }
  const std::vector<KoenigChart>& koenig() const { return koenig_; }
  const KoenigChart& koenig(int cycle) const { return koenig_[cycle]; }
  const std::vector<KoebeFit>& koebe_fits() const { return fits_; }
  const AtlasSettings& settings() const { return settings_; }
  std::vector<int> critical_nodes() const;

  // Chart value chi_x(u) and ratio chi_x(u)/u in the node's local chart.
  template <class T>
  T value(int x, const T& u) const { return u * ratio(x, u); }
  cplx ratio(int x, cplx u) const { return ratio_impl(x, u); }
  Jet ratio(int x, const Jet& u) const { return ratio_impl(x, u); }

  cplx chart_value(int x, const SpherePoint& z) const;
  // chi_x^{-1}(w) as a local coordinate / as a sphere point.
  cplx inverse_local(int x, cplx w) const;
  SpherePoint inverse(int x, cplx w) const;
  // chi^#(z) = sigma(u) |chi'(u)|.
  double chart_sharp(int x, cplx u) const;

  // Radius of chi_x(U_x^n); constant for n <= depth.
  double radius(int x, int n) const;
  // Largest level n (capped at n_max) with |w| <= radius(x, n); -1 when
  // |w| > radius(x, 0).
  int level_of(int x, double abs_w) const;

  struct Membership {
    int node = -1;
    cplx u{0.0};
    cplx w{0.0};
    int level = -1;
  };
  // Node whose U^0 contains z, with the chart value and level.
  Membership locate(const SpherePoint& z) const;
  // Round-trip check that z lies in the component U_x^0.
  bool in_component(int x, const SpherePoint& z, double tol = 1e-8) const;

  // Sample point of U_x^n: chi_x^{-1}(w), |w| = radius * sqrt(a), arg = 2 pi b.
  SpherePoint sample(int x, int n, double a, double b) const;

  struct Issue {
    int cycle = -1;
    int node = -1;
    std::string what;
  };
  std::vector<Issue> validate() const;

 private:
  template <class T>
  T ratio_impl(int x, const T& u) const;
  void compute_bound(int x);
  std::optional<cplx> newton_local(int x, cplx w, cplx seed) const;
  std::optional<cplx> continue_local(int x, cplx w, int steps) const;

  std::shared_ptr<const RationalFunction> f_;
  OrbitSchedule schedule_;
  std::vector<Node> nodes_;
  std::vector<KoenigChart> koenig_;
  std::vector<KoebeFit> fits_;
  std::vector<double> log_lambda_;  // log |Lambda| / period, per cycle
  AtlasSettings settings_;
};

// Owner node and level of z (node -1 and level -1 when z lies outside every U^0).
struct OwnerLevel {
  int owner = -1;
  int level = -1;
};
OwnerLevel neighborhood_level(const ChartAtlas& atlas, const SpherePoint& z);

// Chart value of the critical chart at node c.
cplx critical_phi(const ChartAtlas& atlas, int c, const SpherePoint& z);

struct ResidualReport {
  double max_residual = 0.0;
  std::size_t samples = 0;
};
// sup |psi(f z) - lambda psi(z)| over samples in U_p^1 (per cycle point).
ResidualReport koenig_residual(const ChartAtlas& atlas, int node, std::size_t samples,
                               std::uint64_t seed);
// sup |chi_y(f z) - chi_x(z)^d| over samples in U_x^0.
ResidualReport diagram_residual(const ChartAtlas& atlas, int node, std::size_t samples,
                                std::uint64_t seed);

}  // namespace qrx
