#pragma once

#include "apw/spectral.hpp"

namespace apw {

/// A verified positive potential V with finite Fourier support.
///
/// Two equivalent coefficient views are kept: `field()` in the orthonormal
/// e_G convention, and `amplitudes()` as plain Fourier-series amplitudes
/// v_K = (2 pi)^{-d/2} V_K, so that V(x) = sum_K v_K exp(i K.x). Whichever
/// view the potential was built from is stored verbatim; the other is derived.
/// All operator applications go through the amplitudes.
///
/// Construction samples V on a uniform grid with 4*(max|K_i| + 1) points per
/// axis. The reported lower bound is the grid minimum minus 1e-12 times the
/// sup-scale of V. A potential whose minimum touches zero within that margin
/// is still accepted when its mean is positive (-Delta + V remains coercive on
/// the torus); it reports nu_lower() = 0 and strictly_positive() = false.
/// Anything else fails construction.
class Potential {
 public:
  static Potential from_coefficients(SpectralField v_hat);
  static Potential from_amplitudes(SpectralField amplitudes);
  /// V = c.
  static Potential constant(double c, int dim);

  int dim() const { return field_.dim(); }
  const SpectralField& field() const { return field_; }
  const SpectralField& amplitudes() const { return amplitudes_; }

  double nu_lower() const { return nu_lower_; }
  double nu_upper() const { return nu_upper_; }
  bool strictly_positive() const { return strictly_positive_; }
  double alpha_lower() const { return std::min(nu_lower_, 1.0); }
  double alpha_upper() const { return std::max(nu_upper_, 1.0); }
  /// sum_K |V_K| in the e_G convention.
  double l1_total() const { return l1_total_; }
  /// Mean value (2 pi)^{-d/2} V_0.
  double mean() const;

  /// Smallest integer M with supp V ⊂ ball(M).
  int support_radius() const { return support_radius_; }
  /// sum_{|K| > M} |v_K| over amplitudes; bounds ||(V - Pi_M V) u||_L2 / ||u||_L2.
  double amplitude_tail_l1(int M) const;
  /// Amplitudes restricted to ball(M).
  SpectralField truncated_amplitudes(int M) const;

 private:
  Potential(SpectralField field, SpectralField amplitudes);

  SpectralField field_;
  SpectralField amplitudes_;
  double nu_lower_ = 0.0;
  double nu_upper_ = 0.0;
  double l1_total_ = 0.0;
  int support_radius_ = 0;
  bool strictly_positive_ = false;
};

/// Coefficients of (-Delta + V) u.
SpectralField apply_operator(const SpectralField& u, const Potential& V);

/// a(u, v) = (grad u, grad v) + (V u, v), conjugate-linear in u.
Complex a_inner(const SpectralField& u, const SpectralField& v, const Potential& V);

/// sqrt(a(u, u)).
double energy_norm(const SpectralField& u, const Potential& V);

}  // namespace apw
