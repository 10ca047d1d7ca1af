#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

#include "qrx/modified_maps.hpp"

namespace qrx {

struct Icosphere {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};
// Subdivided icosahedron with 10 * 4^level + 2 vertices on the unit sphere.
Icosphere icosphere(int level);

// Icosphere vertices as sphere points, followed by the critical points of the map.
std::vector<SpherePoint> analysis_grid(const ModifiedMapFamily& family, int level);

struct SCalibration {
  double s = 1.0;
  int threshold_index = 0;        // last n with a grid norm <= 1 (0 if none)
  std::vector<double> min_norms;  // entry n = min over the grid, n >= 1
  double r0 = 0.0;
};
SCalibration calibrate_s(const ModifiedMapFamily& family, const std::vector<SpherePoint>& grid,
                         int n_max, double safety = 0.9);

// r_n(z) = 1 - s / ||D(f_1 o ... o f_n)(z)|| for n >= 1 and the constant r_0.
// Values are kept as depths d_n = 1 - r_n so that spheres close to the unit
// sphere stay resolved.
class RadiusField {
 public:
  RadiusField(std::shared_ptr<const ModifiedMapFamily> family, double s, double r0,
              int window = 6);
  static RadiusField calibrate(std::shared_ptr<const ModifiedMapFamily> family,
                               const std::vector<SpherePoint>& grid, int window = 6,
                               double safety = 0.9);

  const ModifiedMapFamily& family() const { return *family_; }
  std::shared_ptr<const ModifiedMapFamily> family_ptr() const { return family_; }
  double s() const { return s_; }
  double r0() const { return r0_; }
  int window() const { return window_; }
  // Largest index the field evaluates.
  int n_max() const { return family_->n_max(); }

  double norm(int n, const SpherePoint& z) const;
  double depth(int n, const SpherePoint& z) const;
  double radius(int n, const SpherePoint& z) const { return 1.0 - depth(n, z); }
  // Depths d_lo .. d_hi (clamped to [0, n_max]); entry i is index lo + i.
  std::vector<double> depths(const SpherePoint& z, int lo, int hi) const;

  // Index m != n in the window with the smallest radius above r_n(z); ties
  // (depths equal to 1e-12 relative) go to the smaller index.
  int consecutive_index(int n, const SpherePoint& z) const;

 private:
  std::shared_ptr<const ModifiedMapFamily> family_;
  double s_, r0_;
  int window_;
};

std::pair<double, double> radius_and_distance(const RadiusField& field, int n, const SpherePoint& z);
int consecutive_index(const RadiusField& field, int n, const SpherePoint& z);

// Select the consecutive index from precomputed depths (entry i is index lo + i).
int consecutive_from_depths(const std::vector<double>& depths, int lo, int n);

struct PrismCoords {
  SpherePoint z;
  int n = 1;
  int m = 2;
  double t = 0.0;
  double q = 1.0;  // height of the parameter interval [0, q]
};
double rho_interp(const RadiusField& field, const PrismCoords& c);
// Depth 1 - rho computed without cancellation.
double rho_depth(const RadiusField& field, const PrismCoords& c);
inline double rho_interp(double r_n, double r_m, double t, double q = 1.0) {
  return (q - t) / q * r_n + t / q * r_m;
}

// Smallest N >= 2 with r_N(z) > r_1(z) + margin at every grid point.
int compute_N0(const RadiusField& field, const std::vector<SpherePoint>& grid,
               double margin = 1e-6);
// Same rule on precomputed radii rows (row n holds r_n over the grid).
int compute_N0(const std::vector<std::vector<double>>& radii, double margin = 1e-6);

struct ApproxSphereMesh {
  int n = 0;
  std::vector<Vec3> vertices;  // unit-sphere embedding scaled by r_n
  std::vector<double> radii;
  std::vector<std::array<int, 3>> faces;

  int euler_characteristic() const;
  void write_obj(std::ostream& out) const;
};
ApproxSphereMesh mesh_sphere(const RadiusField& field, int n, int subdivision_level);

struct MonotonicityReport {
  double a = 0.0;  // min of (r_{n+1} - r_n) / d_n over samples
  double b = 0.0;  // max of the same ratio
  std::size_t samples = 0;
  std::size_t violations = 0;  // samples with r_{n+1} <= r_n
  bool pass = false;
};
// Samples U_x^n for n in [n_lo, n_hi] (x a critical or postcritical node).
MonotonicityReport critical_monotonicity_report(const RadiusField& field, int node, int n_lo,
                                                int n_hi, std::size_t samples_per_level,
                                                std::uint64_t seed, double ratio_bound = 50.0);

}  // namespace qrx
