#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "pipeline.hpp"

namespace qrx::test {

inline RationalFunction chain_map() { return RationalFunction({-2.0, 0.0, 1.0}, {0.0, 0.0, 1.0}); }

// (z^2 + 1)^2 / (4 z (z^2 - 1))
inline RationalFunction lattes_map() {
  return RationalFunction({1.0, 0.0, 2.0, 0.0, 1.0}, {0.0, -4.0, 0.0, 4.0});
}

inline pipeline::JobConfig config_for(const std::string& stem) {
  pipeline::JobConfig c;
  c.map = pipeline::load_map(stem, pipeline::default_maps_dir());
  return c;
}

// Built pipeline objects, shared by every test in the binary.
inline const pipeline::Built& built(const std::string& stem) {
  static std::map<std::string, std::unique_ptr<pipeline::Built>> cache;
  auto& slot = cache[stem];
  if (!slot) slot = std::make_unique<pipeline::Built>(pipeline::build(config_for(stem)));
  return *slot;
}

inline SpherePoint random_point(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return SpherePoint::from_unit_vector(v.normalized());
}

inline cplx random_disk(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::polar(radius * std::sqrt(u(rng)), 2.0 * M_PI * u(rng));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace qrx::test
