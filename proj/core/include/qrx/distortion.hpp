#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qrx/extension.hpp"

namespace qrx {

struct DistortionSettings {
  double eps_max = 1e-2;
  double eps_min = 1e-4;
  double ratio = 0.5;   // geometric step of the schedule
  int directions = 64;  // Fibonacci sphere (3D) or equally spaced circle (2D)
  int tail = 3;         // K is the max over this many of the smallest radii
};

std::vector<double> epsilon_schedule(const DistortionSettings& s, double scale = 1.0);
std::vector<Vec3> fibonacci_directions(int count);

struct PointDistortion {
  std::vector<double> eps;
  std::vector<double> ratio;  // max / min image distance per radius, NaN if unavailable
  double K = 1.0;
  double spread = 0.0;  // max - min of the ratios entering K
};

// Builds the estimate from image distances of probes; distance(dir, i)
// is the distance between the images of x and of the i-th probe radius in
// direction dir. A NaN distance marks an unavailable probe.
PointDistortion distortion_from_distances(const std::function<double(int, std::size_t)>& distance,
                                          const std::vector<double>& eps, int directions, int tail);

// Limsup proxy of max/min |f(x) - f(y)| over |x - y| = eps for a map of R^2
// or R^3 (dimension from x). Probes raising a domain error are skipped.
PointDistortion estimate_distortion(const PointMap& f, const Eigen::VectorXd& x,
                                    const DistortionSettings& s = {});

// Point at Euclidean offset eps * dir from p, dir given in the frame
// (tangent, tangent, outward normal) at p. The radial part is formed
// without cancellation.
ExtensionPoint probe_point(const ExtensionPoint& p, const Vec3& dir, double eps);

// Map of the shell with per-orbit state (the prism index hint for F).
using ShellStep = std::function<ExtensionPoint(const ExtensionPoint&, int& hint)>;

struct DistortionSample {
  ExtensionPoint p;
  int hint = -1;
  bool critical = false;    // started in a critical prism
  std::vector<double> K;    // entry n - 1 is the estimate for F^n
  std::vector<double> spread;
};

struct DistortionReport {
  std::vector<DistortionSample> samples;
  std::vector<double> K;  // per n (entry n - 1): max over samples
  double slope = 0.0;     // least-squares slope of log K against n
  double max_K = 0.0;
  bool finite = true;
  bool pass = false;
  std::size_t dropped = 0;
  std::vector<std::string> notes;
};

struct UniformKSettings {
  std::size_t samples = 200;
  int n_max = 8;
  int level_offset = 8;          // samples start between S_{N0 + offset} and its neighbor
  double critical_fraction = 0.5;
  double slope_tol = 0.05;
  std::uint64_t seed = 0;
  DistortionSettings probe;      // radii are relative to the depth of each sample
};

DistortionReport uniform_K_report(const ShellStep& step, const std::vector<DistortionSample>& samples,
                                  const UniformKSettings& settings);

struct SampleSet {
  std::vector<DistortionSample> samples;
  std::size_t rejected_escape = 0;  // orbit left Omega before n_max steps
  std::size_t rejected_branch = 0;  // F undefined along the orbit (branch or axis errors)
};
// Draws points of Omega_{n_max}: half uniformly on the sphere and half in
// critical prisms, each between S_L (L = N0 + level_offset) and its
// consecutive sphere. Candidates whose F-orbit fails are rejected and counted.
SampleSet extension_samples(const ExtensionDomain& domain, const UniformKSettings& settings);
// Follows F^n for n = 1..n_max from the samples above.
DistortionReport uniform_K_report(const ExtensionDomain& domain, const UniformKSettings& settings);

// Uniform points of the sphere at a fixed depth.
std::vector<DistortionSample> shell_samples(std::size_t count, double depth, std::uint64_t seed);

ShellStep extension_step(const ExtensionDomain& domain);
// (z, 1 - d) -> (f z, 1 - k f^#(z) d): the regular branch with its radial
// scale off by the factor k, so that the distortion of the n-th iterate is k^n.
ShellStep radial_control_step(const RationalFunction& f, double k = 2.0);
// (z, 1 - d) -> (g z, 1 - g^#(z) d) for a Möbius map g.
ShellStep mobius_step(const RationalFunction& g);

double fitted_slope(const std::vector<double>& log_values);

struct KoebeCheck {
  double c1 = 1.0;  // min of dist(f z, f w) / (f^#(z) dist(z, w))
  double c2 = 1.0;  // max of the same ratio
  double sharp_ratio = 1.0;  // max of f^#(w) / f^#(z) over the pairs
  std::size_t pairs = 0;
};
// Fits the spherical Koebe constants on pairs in B(z0, r); R is checked for
// injectivity on B(z0, R_outer) and for an image within a hemisphere.
KoebeCheck koebe_check(const RationalFunction& f, const SpherePoint& z0, double r, double r_outer,
                       std::size_t pairs = 2000, std::uint64_t seed = 0);

struct ContinuityReport {
  double lateral = 0.0;  // critical vs regular branch on |chi_c| = radius(c, n)
  double bottom = 0.0;   // critical branch at t = 0 vs (f_n z, r_{n-1})
  double top = 0.0;      // critical branch at t = 1 vs (f_{n+1} z, r_n)
  std::size_t samples = 0;
  double max() const;
};
ContinuityReport boundary_continuity_check(const ExtensionDomain& domain, int c, int n,
                                           int samples_on_boundary = 32);

}  // namespace qrx
