#include "apw/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "dd.hpp"

namespace apw {

namespace {

// Accumulates coefficients on a growing frequency set in double-double.
class Accumulator {
 public:
  explicit Accumulator(int dim) : dim_(dim) {}

  void add(const FreqIndex& g, const dd::Complex& v) {
    const auto [it, inserted] = slot_.try_emplace(g.key(), freqs_.size());
    if (inserted) {
      freqs_.push_back(g);
      acc_.emplace_back();
    }
    acc_[it->second] = acc_[it->second] + v;
  }

  SpectralField field(bool real) const {
    IndexSet support(dim_, freqs_);
    std::vector<Complex> c(support.size());
    for (std::size_t i = 0; i < freqs_.size(); ++i) c[*support.find(freqs_[i])] = acc_[i].rounded();
    return SpectralField(std::move(support), std::move(c), real);
  }

 private:
  int dim_;
  std::unordered_map<std::int64_t, std::size_t> slot_;
  std::vector<FreqIndex> freqs_;
  std::vector<dd::Complex> acc_;
};

dd::Complex coefficient(const SpectralField& u, std::size_t i) {
  return dd::Complex::of(u.coeffs()[i], u.low().empty() ? Complex{} : u.low()[i]);
}

// acc -= (-Delta + W) u with W given by plain amplitudes.
void subtract_operator(Accumulator& acc, const SpectralField& u, const SpectralField& amplitudes) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    const FreqIndex& g = u.support()[i];
    const dd::Complex ui = coefficient(u, i);
    acc.add(g, ui * dd::Real{-static_cast<double>(g.norm2()), 0.0});
    for (std::size_t k = 0; k < amplitudes.size(); ++k) acc.add(g + amplitudes.support()[k], ui * -amplitudes.coeffs()[k]);
  }
}

Residual eigen_residual_with(const SpectralField& u, double lambda, double lambda_lo, const SpectralField& amplitudes) {
  if (u.dim() != amplitudes.dim()) throw std::invalid_argument("residual: dimension mismatch");
  Accumulator acc(u.dim());
  const dd::Real lam = dd::quick_two_sum(lambda, lambda_lo);
  for (std::size_t i = 0; i < u.size(); ++i) acc.add(u.support()[i], coefficient(u, i) * lam);
  subtract_operator(acc, u, amplitudes);
  return Residual{acc.field(u.is_real()), 0.0, {}};
}

void fill_weights(Residual& r) {
  const auto& s = r.field.support();
  r.per_frequency.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    r.per_frequency[i] = std::norm(r.field.coeffs()[i]) / (1.0 + s[i].norm2());
  }
}

}  // namespace

Residual residual(const SpectralField& u, double lambda, const Potential& V, double lambda_lo) {
  Residual r = eigen_residual_with(u, lambda, lambda_lo, V.amplitudes());
  fill_weights(r);
  return r;
}

Residual truncated_residual(const SpectralField& u, double lambda, const Potential& V, int M, double lambda_lo) {
  if (M < 0) throw std::invalid_argument("truncated_residual: M must be nonnegative");
  Residual r = eigen_residual_with(u, lambda, lambda_lo, V.truncated_amplitudes(M));
  r.truncation_bound = V.amplitude_tail_l1(M) * hs_norm(u, 0.0);
  fill_weights(r);
  return r;
}

Residual source_residual(const SpectralField& w, const SpectralField& f, const Potential& V) {
  if (w.dim() != f.dim() || w.dim() != V.dim()) throw std::invalid_argument("source_residual: dimension mismatch");
  Accumulator acc(f.dim());
  for (std::size_t i = 0; i < f.size(); ++i) acc.add(f.support()[i], coefficient(f, i));
  subtract_operator(acc, w, V.amplitudes());
  Residual r{acc.field(f.is_real() && w.is_real()), 0.0, {}};
  fill_weights(r);
  return r;
}

double eta(const Residual& r) {
  double sum = 0.0;
  for (double w : r.per_frequency) sum += w;
  return std::sqrt(sum);
}

double eta(const Residual& r, const IndexSet& subset) {
  double sum = 0.0;
  const auto& s = r.field.support();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (subset.contains(s[i])) sum += r.per_frequency[i];
  return std::sqrt(sum);
}

double eta_cluster(std::span<const Residual> rs) {
  double sum = 0.0;
  for (const auto& r : rs) sum += std::pow(eta(r), 2);
  return std::sqrt(sum);
}

double eta_cluster(std::span<const Residual> rs, const IndexSet& subset) {
  double sum = 0.0;
  for (const auto& r : rs) sum += std::pow(eta(r, subset), 2);
  return std::sqrt(sum);
}

double galerkin_defect(const Residual& r, const IndexSet& on) {
  double on_max = 0.0, all_max = 0.0;
  const auto& s = r.field.support();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = std::abs(r.field.coeffs()[i]);
    all_max = std::max(all_max, a);
    if (on.contains(s[i])) on_max = std::max(on_max, a);
  }
  return all_max > 0.0 ? on_max / all_max : 0.0;
}

EstimatorValue estimator_breakdown(std::span<const Residual> rs, const IndexSet& current) {
  EstimatorValue out;
  std::unordered_map<std::int64_t, std::size_t> slot;
  double total_sq = 0.0;
  for (const auto& r : rs) {
    const auto& s = r.field.support();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double w = r.per_frequency[i];
      total_sq += w;
      if (current.contains(s[i])) {
        out.on_set_sq += w;
        continue;
      }
      const FreqIndex rep = pair_representative(s[i]);
      const auto [it, inserted] = slot.try_emplace(rep.key(), out.per_pair.size());
      if (inserted) out.per_pair.push_back({rep, 0.0});
      out.per_pair[it->second].value += w;
    }
  }
  std::sort(out.per_pair.begin(), out.per_pair.end(),
            [](const PairContribution& a, const PairContribution& b) { return canonical_less(a.rep, b.rep); });
  out.total = std::sqrt(total_sq);
  return out;
}

TruncationChoice choose_truncation(std::span<const SpectralField> U, std::span<const double> lambdas,
                                   const Potential& V, double zeta, int start_M, std::span<const double> lambda_lo) {
  if (U.size() != lambdas.size() || (!lambda_lo.empty() && lambda_lo.size() != lambdas.size())) {
    throw std::invalid_argument("choose_truncation: size mismatch");
  }
  if (!(zeta >= 0.0 && zeta < 1.0)) throw std::invalid_argument("choose_truncation: zeta must lie in [0, 1)");
  const int full = V.support_radius();
  int M = std::clamp(start_M, 0, full);
  for (;;) {
    TruncationChoice c;
    c.M = M;
    double bound_sq = 0.0;
    for (std::size_t l = 0; l < U.size(); ++l) {
      c.residuals.push_back(truncated_residual(U[l], lambdas[l], V, M, lambda_lo.empty() ? 0.0 : lambda_lo[l]));
      bound_sq += std::pow(c.residuals.back().truncation_bound, 2);
    }
    c.bound = std::sqrt(bound_sq);
    c.eta_tilde = eta_cluster(c.residuals);
    if (c.bound == 0.0 || c.bound <= zeta * c.eta_tilde) {
      c.zeta_actual = c.bound > 0.0 ? c.bound / c.eta_tilde : 0.0;
      return c;
    }
    if (M >= full) {
      throw std::logic_error("choose_truncation: nonzero bound at full potential support");
    }
    M = std::min(std::max(1, 2 * M), full);
  }
}

}  // namespace apw
