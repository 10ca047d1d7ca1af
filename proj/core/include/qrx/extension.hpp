#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "qrx/spheres.hpp"

namespace qrx {

struct CylinderCoords {
  cplx x{0.0};     // disk coordinate in the chart of the prism's base node
  double t = 0.0;  // height in [0, q]
};

enum class Branch { sphere, regular, critical };
const char* to_string(Branch b);

enum class PrismSide { critical, postcritical };

struct ExtensionSettings {
  double axis_tol = 1e-10;    // spherical distance below which a point is on an axis
  double mu_scale = 1.0;      // multiplies mu in the cylinder map (fault injection)
  double degenerate = 1e-12;  // relative gap below which two radii are equal
};

// Where a point of the inner half of Omega sits: between S_n and its
// consecutive sphere S_m, at fraction t = (d_n - depth) / (d_n - d_m).
struct PrismLocation {
  int n = 0;
  int m = 0;
  double t = 0.0;
  double depth_n = 0.0;
  double depth_m = 0.0;
};

struct ExtensionImage {
  ExtensionPoint point;
  Branch branch = Branch::regular;
  int owner = -1;  // critical node for the critical branch
  int n = 0;       // prism index of the source point
};

// The extension F on Omega = {(z, r): r_{N0}(z) <= r <= 1 / r_{N0}(z)}.
// The inner half is built prism by prism; the outer half is M o F o M.
class ExtensionDomain {
 public:
  ExtensionDomain(std::shared_ptr<const RadiusField> field, int N0, ExtensionSettings settings = {});
  // Calibrated field on the analysis grid with N0 computed on the same grid.
  static ExtensionDomain build(std::shared_ptr<const ModifiedMapFamily> family, int grid_level,
                               ExtensionSettings settings = {});

  const RadiusField& field() const { return *field_; }
  std::shared_ptr<const RadiusField> field_ptr() const { return field_; }
  const ChartAtlas& atlas() const { return field_->family().atlas(); }
  const ExtensionSettings& settings() const { return settings_; }
  int N0() const { return N0_; }

  bool contains(const ExtensionPoint& p) const;
  // Prism location of an inner-half point. `hint` is a guess for n.
  PrismLocation locate(const ExtensionPoint& p, int hint = -1) const;

  ExtensionPoint extend(const ExtensionPoint& p) const { return extend_traced(p).point; }
  ExtensionImage extend_traced(const ExtensionPoint& p, int hint = -1) const;

  // The prism formulas for an explicit location, with no Omega check.
  ExtensionImage regular_image(const SpherePoint& z, int n, int m, double t) const;
  // x = chi_c(z) with z in U_c^n; t is the fraction between S_n and S_{n+1}.
  ExtensionImage critical_image(int c, cplx x, int n, double t) const;

  // q_n = r_{n+1}(c) - r_n(c) and q'_{n-1} = r_n(y) - r_{n-1}(y) for y = f(c).
  double critical_height(int c, int n) const;
  double postcritical_height(int y, int n) const;
  // Disk radius of the prism base: radius(c, n) or radius(y, n - 1).
  double cylinder_radius(PrismSide side, int node, int n) const;

  // alpha_1 (critical side) and alpha_2 (postcritical side) and inverses.
  ExtensionPoint prism_parametrization(PrismSide side, int node, int n,
                                       const CylinderCoords& c) const;
  CylinderCoords prism_coordinates(PrismSide side, int node, int n, const ExtensionPoint& p) const;
  // beta(x, t) = (h_n(x) (q - t)/q + h_{n+1}(x) t/q, mu t), mu = q'/q.
  CylinderCoords beta_map(int c, int n, const CylinderCoords& c_in) const;

 private:
  ExtensionImage extend_inner(const ExtensionPoint& p, int hint) const;

  std::shared_ptr<const RadiusField> field_;
  int N0_;
  ExtensionSettings settings_;
};

// M(z, r) = (z, 1/r).
ExtensionPoint reflect(const ExtensionPoint& p);

struct OrbitRecord {
  int step = 0;
  ExtensionPoint point;
  Branch branch = Branch::sphere;
  int owner = -1;
};

struct IterationResult {
  ExtensionPoint point;            // last point reached
  int steps = 0;                   // iterations carried out
  std::optional<int> escape;       // first k with F^k(p) outside Omega
  std::vector<OrbitRecord> orbit;  // filled when recording
};

// F^k(p) with a domain check before every step. Leaving Omega ends the
// orbit with an escape index instead of an error.
IterationResult iterate_extension(const ExtensionDomain& domain, const ExtensionPoint& p, int k,
                                  bool record = false);

// One line per step: step, z (re im, or inf), r, branch tag, owner tag.
void write_orbit(std::ostream& out, const ExtensionDomain& domain, const IterationResult& orbit);

}  // namespace qrx
