#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "qrx/coordinates.hpp"

namespace qrx {

// One application of f_n at a point.
struct MapStep {
  SpherePoint image;
  double norm = 0.0;  // ||Df_n|| in the spherical metric
  int owner = -1;     // critical node when the winding branch was used
  bool winding = false;
};

struct TraceStep {
  SpherePoint z;     // point before the step
  int index = 0;     // the step applies f_index
  int owner = -1;    // critical node whose neighborhood U^index contains z
  bool winding = false;
  double factor = 0.0;
};

// Orbit of z under f_1 o ... o f_n: f_n is applied first.
struct CompositionTrace {
  int n = 0;
  std::vector<TraceStep> steps;
  SpherePoint result;
  double norm = 1.0;

  // Map indices of the winding steps, outermost (largest index) first.
  std::vector<int> winding_indices() const;
  // Index k such that the winding step is f_{k+1} (the first one for chains).
  std::optional<int> k() const;
};

class ModifiedMapFamily {
 public:
  explicit ModifiedMapFamily(ChartAtlas atlas, int n_max = 12);

  const ChartAtlas& atlas() const { return atlas_; }
  const RationalFunction& map() const { return atlas_.map(); }
  const OrbitSchedule& schedule() const { return atlas_.schedule(); }
  int n_max() const { return n_max_; }

  // Period used for geometric-mean interpolation of norms (the longest
  // postcritical cycle unless overridden).
  int interpolation_period() const { return period_; }
  void set_interpolation_period(int k);

  // Critical node c with z in U_c^n, or -1.
  int critical_owner(int n, const SpherePoint& z, cplx* chart_value = nullptr) const;

  MapStep step(int n, const SpherePoint& z) const;
  SpherePoint eval(int n, const SpherePoint& z) const { return step(n, z).image; }
  CompositionTrace compose(int n, const SpherePoint& z) const;

  // compose(n, z).norm for n = lo..hi (entry i is index lo + i). The plain
  // f-orbit of z is shared between indices, so the cost is close to a
  // single composition away from the critical neighborhoods.
  std::vector<double> compose_norms(const SpherePoint& z, int lo, int hi) const;
  // The same with the periodic interpolation of schedule_compose.
  std::vector<double> schedule_norms(const SpherePoint& z, int lo, int hi) const;

 private:
  ChartAtlas atlas_;
  int n_max_;
  int period_ = 1;
};

SpherePoint modified_eval(const ModifiedMapFamily& family, int n, const SpherePoint& z);
std::pair<SpherePoint, CompositionTrace> compose_eval(const ModifiedMapFamily& family, int n,
                                                      const SpherePoint& z);
double compose_norm(const ModifiedMapFamily& family, int n, const SpherePoint& z);

// min over the grid of ||D(f_1 o ... o f_n)|| for n = 1..n_max (entry 0 unused).
std::vector<double> min_norm_growth(const ModifiedMapFamily& family,
                                    const std::vector<SpherePoint>& grid, int n_max);

struct ScheduleValue {
  SpherePoint z;
  double norm = 0.0;
};
// Composition value and its norm, with the norm interpolated by geometric
// means between multiples of the cycle period: D_{km+j} = D_m (D_{m+1}/D_m)^{j/k}.
ScheduleValue schedule_compose(const ModifiedMapFamily& family, int n, const SpherePoint& z);

double geometric_interpolation(double d_m, double d_m1, int j, int k);

}  // namespace qrx
