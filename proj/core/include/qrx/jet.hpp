#pragma once

#include <complex>

namespace qrx {

using cplx = std::complex<double>;

// First-order jet of a holomorphic function: value and complex derivative.
struct Jet {
  cplx v{0.0};
  cplx d{0.0};

  Jet() = default;
  Jet(cplx value) : v(value) {}
  Jet(double value) : v(value) {}
  Jet(cplx value, cplx deriv) : v(value), d(deriv) {}

  static Jet variable(cplx at) { return {at, 1.0}; }
};

inline Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d + b.d}; }
inline Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d - b.d}; }
inline Jet operator-(const Jet& a) { return {-a.v, -a.d}; }
inline Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline Jet operator/(const Jet& a, const Jet& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Jet operator+(const Jet& a, cplx b) { return {a.v + b, a.d}; }
inline Jet operator+(cplx a, const Jet& b) { return {a + b.v, b.d}; }
inline Jet operator-(const Jet& a, cplx b) { return {a.v - b, a.d}; }
inline Jet operator-(cplx a, const Jet& b) { return {a - b.v, -b.d}; }
inline Jet operator*(const Jet& a, cplx b) { return {a.v * b, a.d * b}; }
inline Jet operator*(cplx a, const Jet& b) { return {a * b.v, a * b.d}; }
inline Jet operator/(const Jet& a, cplx b) { return {a.v / b, a.d / b}; }
inline Jet operator/(cplx a, const Jet& b) {
  return {a / b.v, -a * b.d / (b.v * b.v)};
}

inline cplx value_of(const cplx& z) { return z; }
inline cplx value_of(const Jet& z) { return z.v; }

// Principal d-th root; callers keep the argument away from the cut.
inline cplx principal_root(cplx z, int d) {
  return d == 1 ? z : std::pow(z, 1.0 / d);
}
inline Jet principal_root(const Jet& z, int d) {
  if (d == 1) return z;
  cplx r = std::pow(z.v, 1.0 / d);
  return {r, r * z.d / (static_cast<double>(d) * z.v)};
}

}  // namespace qrx
