#pragma once

#include <string>
#include <vector>

#include "qrx/sphere.hpp"

namespace qrx {

struct CriticalDatum {
  SpherePoint c;
  int local_degree = 2;
};

std::vector<CriticalDatum> find_critical_points(const RationalFunction& f);

// Derivative of f at a fixed point p in the local chart at p.
cplx multiplier(const RationalFunction& f, const SpherePoint& p, double tol = 1e-9);

enum class CaseTag { fixed_value, chain, periodic_cycle, chained_critical };
const char* to_string(CaseTag tag);

struct OrbitNode {
  SpherePoint z;
  int image = -1;
  int local_degree = 1;
  bool critical = false;
  bool postcritical = false;
  int cycle = -1;       // index into OrbitSchedule::cycles when periodic
  int depth = 0;        // steps until the orbit reaches its cycle
  int terminal = -1;    // cycle node reached after `depth` steps
  int degree_product = 1;  // product of local degrees over those steps
};

struct Cycle {
  std::vector<int> nodes;  // in orbit order, nodes[i] -> nodes[i+1]
  cplx multiplier{0.0};    // of f^period at nodes[0]
  std::vector<cplx> step_multipliers;  // chart derivative of f at nodes[i]
  bool contains_critical = false;
  int period() const { return static_cast<int>(nodes.size()); }
};

struct CriticalOrbit {
  int critical = -1;
  std::vector<int> path;  // critical point first, ending at the first cycle node
  CaseTag tag = CaseTag::fixed_value;
  int legs = 0;  // steps from the critical value to the cycle
  bool via_critical = false;
};

struct OrbitSchedule {
  std::vector<OrbitNode> nodes;
  std::vector<Cycle> cycles;
  std::vector<CriticalOrbit> orbits;
  bool expanding = false;
  bool repelling = false;
  CaseTag tag = CaseTag::fixed_value;
  int max_period = 1;

  int find(const SpherePoint& z, double tol = 1e-7) const;
  // Summary such as "0→∞→1→−1 (fixed, |λ|=4)".
  std::string describe() const;
};

OrbitSchedule classify_postcritical(const RationalFunction& f,
                                    const std::vector<CriticalDatum>& crit,
                                    double tol = 1e-9, int max_steps = 64);

std::string format_point(const SpherePoint& z);
std::string format_number(double x);

}  // namespace qrx
