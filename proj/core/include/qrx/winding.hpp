#pragma once

#include <cstdint>
#include <vector>

#include "qrx/jet.hpp"

namespace qrx {

// Winding map of degree d: r e^{it} -> r e^{idt} on the closed unit disk,
// z^d outside.
cplx winding_eval(int d, cplx z);

// rho^d h_d(z / rho): the winding map rescaled to the disk of radius rho.
// Agrees with z^d for |z| >= rho.
cplx winding_rescaled(int d, double rho, cplx z);

// h_{n+1,c}(z) = |lambda|^{-n} h_d(|lambda|^{n/d} z) on |lambda|^{-n/d} D.
// Throws a domain error for |z| beyond the disk (1e-12 relative slack).
cplx winding_scaled(int d, cplx lambda, int n, cplx z);

struct WindingNorms {
  double max_expansion;
  double min_expansion;
};

// Closed-form expansion norms of winding_rescaled at z.
WindingNorms winding_rescaled_norms(int d, double rho, cplx z);
// (d |lambda|^{-n+n/d}, |lambda|^{-n+n/d}) on the interior of the disk.
WindingNorms winding_norms(int d, cplx lambda, int n, cplx z);

// Closed sector {r e^{it}: r <= radius, |t - theta0| <= alpha/2}.
struct Sector {
  double theta0 = 0.0;
  double alpha = 0.0;
  double radius = 1.0;

  bool contains(cplx z) const;
  cplx sample(double radial_fraction, double angular_fraction) const;
};

struct SectorReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double worst_lower = 0.0;  // min over pairs of |h z - h w| - |z - w|
  double worst_upper = 0.0;  // min over pairs of d|z - w| - |h z - h w|
};

// Checks |z - w| <= |h_d z - h_d w| <= d |z - w| (slack 1e-12) on `pairs`
// random pairs drawn from the sector.
SectorReport sector_bounds_check(int d, const Sector& sector, std::size_t pairs,
                                 std::uint64_t seed);
SectorReport sector_bounds_check(int d, const std::vector<std::pair<cplx, cplx>>& pairs);

}  // namespace qrx
