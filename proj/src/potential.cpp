#include "apw/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apw {

namespace {

SpectralField scaled(const SpectralField& f, double s) {
  std::vector<Complex> c(f.coeffs().begin(), f.coeffs().end());
  for (auto& v : c) v *= s;
  return SpectralField(f.support(), std::move(c), true);
}

int radius_covering(int norm2) {
  int m = static_cast<int>(std::sqrt(static_cast<double>(norm2)));
  while (m * m < norm2) ++m;
  while (m > 0 && (m - 1) * (m - 1) >= norm2) --m;
  return m;
}

}  // namespace

Potential::Potential(SpectralField field, SpectralField amplitudes)
    : field_(std::move(field)), amplitudes_(std::move(amplitudes)) {
  if (field_.size() == 0) throw std::invalid_argument("potential has empty support");
  double cmax = 0.0;
  for (const auto& c : field_.coeffs()) cmax = std::max(cmax, std::abs(c));
  if (field_.hermitian_defect() > 1e-12 * cmax) {
    throw std::invalid_argument("potential coefficients are not Hermitian-symmetric (V must be real)");
  }
  for (const auto& c : field_.coeffs()) l1_total_ += std::abs(c);
  support_radius_ = radius_covering(field_.support().max_norm2());

  const int n = 4 * (field_.support().max_abs_component() + 1);
  const auto values = evaluate_on_grid(field_, n);
  double lo = values.front().real(), hi = lo, vscale = 0.0;
  for (const auto& v : values) {
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
    vscale = std::max(vscale, std::abs(v));
  }
  const double margin = 1e-12 * vscale;
  nu_upper_ = hi + margin;
  if (lo - margin > 0.0) {
    nu_lower_ = lo - margin;
    strictly_positive_ = true;
  } else if (lo >= -margin && mean() > 0.0) {
    // touches zero (e.g. 1 + cos x): -Delta + V stays coercive, but nu_* = 0
    nu_lower_ = 0.0;
  } else {
    throw std::invalid_argument("potential is not nonnegative with positive mean: grid minimum " + std::to_string(lo));
  }
}

Potential Potential::from_coefficients(SpectralField v_hat) {
  SpectralField amp = scaled(v_hat, basis_scale(v_hat.dim()));
  SpectralField field(v_hat.support(), std::vector<Complex>(v_hat.coeffs().begin(), v_hat.coeffs().end()), true);
  return Potential(std::move(field), std::move(amp));
}

Potential Potential::from_amplitudes(SpectralField amplitudes) {
  SpectralField field = scaled(amplitudes, 1.0 / basis_scale(amplitudes.dim()));
  SpectralField amp(amplitudes.support(), std::vector<Complex>(amplitudes.coeffs().begin(), amplitudes.coeffs().end()),
                    true);
  return Potential(std::move(field), std::move(amp));
}

Potential Potential::constant(double c, int dim) {
  return from_amplitudes(SpectralField(IndexSet(dim, {FreqIndex{}}), {Complex(c)}, true));
}

double Potential::mean() const { return amplitudes_.at(FreqIndex{}).real(); }

double Potential::amplitude_tail_l1(int M) const {
  double tail = 0.0;
  const auto c = amplitudes_.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (amplitudes_.support()[i].norm2() > M * M) tail += std::abs(c[i]);
  return tail;
}

SpectralField Potential::truncated_amplitudes(int M) const {
  if (M >= support_radius_) return amplitudes_;
  return project(amplitudes_, ball(std::max(M, 0), dim()));
}

SpectralField apply_operator(const SpectralField& u, const Potential& V) {
  SpectralField vu = convolve(V.amplitudes(), u);
  std::vector<Complex> c(vu.coeffs().begin(), vu.coeffs().end());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const FreqIndex& g = u.support()[i];
    c[*vu.support().find(g)] += static_cast<double>(g.norm2()) * u.coeffs()[i];
  }
  return SpectralField(vu.support(), std::move(c), u.is_real());
}

Complex a_inner(const SpectralField& u, const SpectralField& v, const Potential& V) {
  return inner(apply_operator(u, V), v);
}

double energy_norm(const SpectralField& u, const Potential& V) {
  return std::sqrt(std::max(0.0, a_inner(u, u, V).real()));
}

}  // namespace apw
