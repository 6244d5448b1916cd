#pragma once

#include <complex>
#include <span>
#include <vector>

#include "apw/frequency.hpp"

namespace apw {

using Complex = std::complex<double>;

/// (2 pi)^{-d/2}, the value of every basis function e_G at |e_G|.
double basis_scale(int dim);

/// Fourier coefficients in the orthonormal basis e_G = (2 pi)^{-d/2} exp(i G.x).
///
/// `is_real()` marks fields that represent real functions, i.e. whose
/// coefficients satisfy u_{-G} = conj(u_G). The flag is carried, not enforced;
/// `hermitian_defect()` measures how far the coefficients are from it.
///
/// A field may carry low-order parts: coefficient i is then the unevaluated
/// sum coeffs()[i] + low()[i] (double-double). Only residual evaluation reads
/// them; every other operation works with coeffs() and drops them.
class SpectralField {
 public:
  explicit SpectralField(int dim = 1);
  SpectralField(IndexSet support, std::vector<Complex> coeffs, bool real = true);
  SpectralField(IndexSet support, std::vector<Complex> coeffs, std::vector<Complex> low, bool real);

  /// Single basis function e_G with unit coefficient. Real only for G = 0.
  static SpectralField basis_function(const FreqIndex& g, int dim);

  int dim() const { return support_.dim(); }
  const IndexSet& support() const { return support_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  /// Empty, or aligned with coeffs().
  std::span<const Complex> low() const { return low_; }
  bool is_real() const { return real_; }
  std::size_t size() const { return coeffs_.size(); }

  /// Coefficient at g, zero off the support.
  Complex at(const FreqIndex& g) const;

  double hermitian_defect() const;

 private:
  IndexSet support_;
  std::vector<Complex> coeffs_;
  std::vector<Complex> low_;
  bool real_;
};

/// sqrt(sum (1+|G|^2)^s |u_G|^2).
double hs_norm(const SpectralField& f, double s);

/// L2 inner product (u, v) = sum conj(u_G) v_G.
Complex inner(const SpectralField& u, const SpectralField& v);

/// Coefficient truncation onto support(f) ∩ s; this is the L2 projection.
SpectralField project(const SpectralField& f, const IndexSet& s);

/// Zero-pads f onto a superset of its support. Throws if s misses part of the support.
SpectralField embed(const SpectralField& f, const IndexSet& s);

/// alpha*x + beta*y on the union of supports.
SpectralField combine(Complex alpha, const SpectralField& x, Complex beta, const SpectralField& y);

/// Discrete convolution w_G = sum_K a_K u_{G-K} over the Minkowski sum of supports.
/// With `a` holding plain Fourier-series amplitudes this is the coefficient
/// vector of the pointwise product.
SpectralField convolve(const SpectralField& a, const SpectralField& u);

/// Coefficients of V*u when both are given in the e_G basis:
/// (2 pi)^{-d/2} sum_K V_K u_{G-K}. Exact, no aliasing.
SpectralField multiply(const SpectralField& v_hat, const SpectralField& u_hat);

/// Direct summation of sum_G u_G e_G(x) at x = 2 pi j / n on a uniform grid.
/// Row-major output, the first axis varies slowest.
std::vector<Complex> evaluate_on_grid(const SpectralField& f, int points_per_axis);

/// Direct summation at one point x (length >= dim).
Complex evaluate_at(const SpectralField& f, std::span<const double> x);

}  // namespace apw
