#pragma once

#include <vector>

#include "qrx/jet.hpp"

namespace qrx {

// Polynomial with ascending coefficients c[0] + c[1] z + ...
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {}
  static Poly constant(cplx a) { return Poly({a}); }
  static Poly linear(cplx a, cplx b) { return Poly({a, b}); }  // a + b z

  const std::vector<cplx>& coeffs() const { return c_; }
  std::vector<cplx>& coeffs() { return c_; }
  cplx operator[](std::size_t k) const { return k < c_.size() ? c_[k] : cplx(0.0); }
  std::size_t size() const { return c_.size(); }

  // Index of the highest coefficient above rel_tol * max |c_k|; -1 for zero.
  int degree(double rel_tol = 0.0) const;
  double max_abs() const;
  Poly trimmed(double rel_tol) const;
  Poly derivative() const;
  // Coefficients in reversed order, padded to formal degree d: z^d p(1/z).
  Poly reversed(int d) const;
  // Drops the first k coefficients (exact division by z^k).
  Poly shifted_down(int k) const;

  template <class T>
  T operator()(const T& z) const {
    if (c_.empty()) return T(cplx(0.0));
    T acc = T(c_.back());
    for (std::size_t i = c_.size() - 1; i-- > 0;) acc = acc * z + c_[i];
    return acc;
  }

  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  friend Poly operator*(cplx s, const Poly& a);

 private:
  std::vector<cplx> c_;
};

// Roots by companion-matrix eigenvalues, polished by Newton.
std::vector<cplx> poly_roots(const Poly& p);

// Truncated power series helpers; a series is a coefficient vector of fixed
// length (order + 1).
namespace series {

std::vector<cplx> mul(const std::vector<cplx>& a, const std::vector<cplx>& b);
std::vector<cplx> reciprocal(const std::vector<cplx>& a);
std::vector<cplx> divide(const std::vector<cplx>& a, const std::vector<cplx>& b);
// p(s) where s is a series.
std::vector<cplx> compose(const Poly& p, const std::vector<cplx>& s);

}  // namespace series

}  // namespace qrx
