#include "qrx/poly.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "qrx/error.hpp"

namespace qrx {

int Poly::degree(double rel_tol) const {
  double cut = rel_tol * max_abs();
  for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k) {
    if (std::abs(c_[k]) > cut) return k;
  }
  return -1;
}

double Poly::max_abs() const {
  double m = 0.0;
  for (auto& a : c_) m = std::max(m, std::abs(a));
  return m;
}

Poly Poly::trimmed(double rel_tol) const {
  int d = degree(rel_tol);
  return Poly(std::vector<cplx>(c_.begin(), c_.begin() + (d + 1)));
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly({0.0});
  std::vector<cplx> out(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) out[k - 1] = c_[k] * static_cast<double>(k);
  return Poly(out);
}

Poly Poly::reversed(int d) const {
  std::vector<cplx> out(d + 1, 0.0);
  for (int k = 0; k <= d; ++k) out[d - k] = (*this)[k];
  return Poly(out);
}

Poly Poly::shifted_down(int k) const {
  if (static_cast<int>(c_.size()) <= k) return Poly({0.0});
  return Poly(std::vector<cplx>(c_.begin() + k, c_.end()));
}

Poly operator+(const Poly& a, const Poly& b) {
  std::vector<cplx> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] + b[k];
  return Poly(out);
}

Poly operator-(const Poly& a, const Poly& b) {
  std::vector<cplx> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] - b[k];
  return Poly(out);
}

Poly operator*(const Poly& a, const Poly& b) {
  if (a.size() == 0 || b.size() == 0) return Poly({0.0});
  std::vector<cplx> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
  return Poly(out);
}

Poly operator*(cplx s, const Poly& a) {
  std::vector<cplx> out = a.c_;
  for (auto& x : out) x *= s;
  return Poly(out);
}

std::vector<cplx> poly_roots(const Poly& p_in) {
  Poly p = p_in.trimmed(1e-14);
  int d = p.degree();
  if (d <= 0) return {};
  // Exact zero roots first; the companion matrix handles them too, but this
  // keeps them exact.
  int zeros = 0;
  while (zeros < d && p[zeros] == 0.0) ++zeros;
  std::vector<cplx> roots(zeros, 0.0);
  Poly q = p.shifted_down(zeros);
  int m = d - zeros;
  if (m > 0) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(m, m);
    cplx lead = q[m];
    for (int i = 1; i < m; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < m; ++i) comp(i, m - 1) = -q[i] / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(comp, false);
    if (solver.info() != Eigen::Success)
      fail(ErrorKind::numeric, "companion eigenvalue solver did not converge");
    Poly dq = q.derivative();
    for (int i = 0; i < m; ++i) {
      cplx z = solver.eigenvalues()[i];
      for (int it = 0; it < 8; ++it) {
        cplx fz = q(z), dz = dq(z);
        if (std::abs(dz) < 1e-300) break;
        cplx step = fz / dz;
        if (!std::isfinite(std::abs(step))) break;
        z -= step;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
      }
      roots.push_back(z);
    }
  }
  return roots;
}

namespace series {

std::vector<cplx> mul(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::size_t n = a.size();
  std::vector<cplx> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; i + j < n; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<cplx> reciprocal(const std::vector<cplx>& a) {
  std::size_t n = a.size();
  if (a[0] == 0.0) fail(ErrorKind::numeric, "series reciprocal of a non-unit");
  std::vector<cplx> out(n, 0.0);
  out[0] = 1.0 / a[0];
  for (std::size_t k = 1; k < n; ++k) {
    cplx acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) acc += a[j] * out[k - j];
    out[k] = -acc / a[0];
  }
  return out;
}

std::vector<cplx> divide(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  return mul(a, reciprocal(b));
}

std::vector<cplx> compose(const Poly& p, const std::vector<cplx>& s) {
  std::size_t n = s.size();
  std::vector<cplx> acc(n, 0.0);
  const auto& c = p.coeffs();
  for (std::size_t i = c.size(); i-- > 0;) {
    acc = mul(acc, s);
    acc[0] += c[i];
  }
  return acc;
}

}  // namespace series

}  // namespace qrx
