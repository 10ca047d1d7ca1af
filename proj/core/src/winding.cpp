#include "qrx/winding.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "qrx/error.hpp"

namespace qrx {

namespace {

cplx ipow(cplx z, int d) {
  cplx acc = 1.0;
  for (int k = 0; k < d; ++k) acc *= z;
  return acc;
}

double angle_gap(double a, double b) {
  double g = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::abs(g);
}

}  // namespace

cplx winding_eval(int d, cplx z) {
  double r = std::abs(z);
  if (r == 0.0) return 0.0;
  if (r >= 1.0) return ipow(z, d);
  // r e^{idt} = z^d / r^{d-1}
  return ipow(z / r, d) * r;
}

cplx winding_rescaled(int d, double rho, cplx z) {
  double r = std::abs(z);
  if (r == 0.0) return 0.0;
  if (r >= rho) return ipow(z, d);
  return ipow(z / r, d) * (r * std::pow(rho, d - 1));
}

cplx winding_scaled(int d, cplx lambda, int n, cplx z) {
  double rho = std::pow(std::abs(lambda), -static_cast<double>(n) / d);
  if (std::abs(z) > rho * (1.0 + 1e-12))
    fail(ErrorKind::domain, "winding_scaled argument outside its disk");
  return winding_rescaled(d, rho, z);
}

WindingNorms winding_rescaled_norms(int d, double rho, cplx z) {
  double r = std::abs(z);
  if (r <= rho) {
    double s = std::pow(rho, d - 1);
    return {d * s, s};
  }
  double s = d * std::pow(r, d - 1);
  return {s, s};
}

WindingNorms winding_norms(int d, cplx lambda, int n, cplx z) {
  double rho = std::pow(std::abs(lambda), -static_cast<double>(n) / d);
  return winding_rescaled_norms(d, rho, z);
}

bool Sector::contains(cplx z) const {
  double r = std::abs(z);
  if (r > radius) return false;
  if (r == 0.0) return true;
  return angle_gap(std::arg(z), theta0) <= 0.5 * alpha + 1e-15;
}

cplx Sector::sample(double radial_fraction, double angular_fraction) const {
  // Area-uniform in radius.
  double r = radius * std::sqrt(radial_fraction);
  double t = theta0 + alpha * (angular_fraction - 0.5);
  return std::polar(r, t);
}

SectorReport sector_bounds_check(int d, const std::vector<std::pair<cplx, cplx>>& pairs) {
  SectorReport rep;
  rep.worst_lower = rep.worst_upper = std::numeric_limits<double>::infinity();
  for (auto& [z, w] : pairs) {
    double base = std::abs(z - w);
    double img = std::abs(winding_eval(d, z) - winding_eval(d, w));
    double lower = img - base, upper = d * base - img;
    rep.worst_lower = std::min(rep.worst_lower, lower);
    rep.worst_upper = std::min(rep.worst_upper, upper);
    if (lower < -1e-12 || upper < -1e-12) ++rep.violations;
    ++rep.pairs;
  }
  return rep;
}

SectorReport sector_bounds_check(int d, const Sector& sector, std::size_t pairs,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<cplx, cplx>> samples;
  samples.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i)
    samples.emplace_back(sector.sample(u(rng), u(rng)), sector.sample(u(rng), u(rng)));
  return sector_bounds_check(d, samples);
}

}  // namespace qrx
