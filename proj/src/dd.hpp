#pragma once

// Double-double arithmetic (unevaluated sum hi + lo, ~32 significant digits)
// built on error-free transformations. Used where residuals must resolve
// values far below double round-off relative to the solution.

#include <cmath>
#include <complex>

namespace apw::dd {

struct Real {
  double hi = 0.0;
  double lo = 0.0;
};

inline Real quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline Real two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline Real two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline Real operator+(Real a, Real b) {
  Real s = two_sum(a.hi, b.hi);
  const Real t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline Real operator-(Real a) { return {-a.hi, -a.lo}; }
inline Real operator-(Real a, Real b) { return a + (-b); }

inline Real operator*(Real a, double b) {
  Real p = two_prod(a.hi, b);
  p.lo += a.lo * b;
  return quick_two_sum(p.hi, p.lo);
}

inline Real operator*(Real a, Real b) {
  Real p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline Real operator/(Real a, Real b) {
  const double q1 = a.hi / b.hi;
  const Real r = a - b * q1;
  const double q2 = r.hi / b.hi;
  const Real r2 = r - b * q2;
  return Real{q1, 0.0} + Real{q2, r2.hi / b.hi};
}

inline Real sqrt(Real a) {
  if (a.hi <= 0.0) return {};
  const double x = std::sqrt(a.hi);
  const Real d = a - two_prod(x, x);
  return quick_two_sum(x, d.hi / (2.0 * x));
}

struct Complex {
  Real re;
  Real im;

  static Complex of(std::complex<double> hi, std::complex<double> lo = {}) {
    return {quick_two_sum(hi.real(), lo.real()), quick_two_sum(hi.imag(), lo.imag())};
  }
  std::complex<double> hi() const { return {re.hi, im.hi}; }
  std::complex<double> lo() const { return {re.lo, im.lo}; }
  std::complex<double> rounded() const { return {re.hi + re.lo, im.hi + im.lo}; }
};

inline Complex operator+(Complex a, Complex b) { return {a.re + b.re, a.im + b.im}; }
inline Complex operator-(Complex a, Complex b) { return {a.re - b.re, a.im - b.im}; }
inline Complex operator*(Complex a, Real s) { return {a.re * s, a.im * s}; }

// (x + iy) * (a + ib) with a plain double-precision complex factor.
inline Complex operator*(Complex z, std::complex<double> c) {
  return {z.re * c.real() - z.im * c.imag(), z.im * c.real() + z.re * c.imag()};
}

inline Complex operator/(Complex z, Real s) { return {z.re / s, z.im / s}; }

inline Real norm(Complex z) { return z.re * z.re + z.im * z.im; }

}  // namespace apw::dd
