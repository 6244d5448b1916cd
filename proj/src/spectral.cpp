#include "apw/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace apw {

double basis_scale(int dim) { return std::pow(2.0 * std::numbers::pi, -0.5 * dim); }

SpectralField::SpectralField(int dim) : support_(dim), real_(true) {}

SpectralField::SpectralField(IndexSet support, std::vector<Complex> coeffs, bool real)
    : support_(std::move(support)), coeffs_(std::move(coeffs)), real_(real) {
  if (coeffs_.size() != support_.size()) {
    throw std::invalid_argument("SpectralField: coefficient count does not match support size");
  }
}

SpectralField::SpectralField(IndexSet support, std::vector<Complex> coeffs, std::vector<Complex> low, bool real)
    : SpectralField(std::move(support), std::move(coeffs), real) {
  if (!low.empty() && low.size() != coeffs_.size()) {
    throw std::invalid_argument("SpectralField: low-order part does not match support size");
  }
  low_ = std::move(low);
}

SpectralField SpectralField::basis_function(const FreqIndex& g, int dim) {
  return SpectralField(IndexSet(dim, {g}), {Complex(1.0)}, g == FreqIndex{});
}

Complex SpectralField::at(const FreqIndex& g) const {
  const auto pos = support_.find(g);
  return pos ? coeffs_[*pos] : Complex{};
}

double SpectralField::hermitian_defect() const {
  double defect = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    defect = std::max(defect, std::abs(coeffs_[i] - std::conj(at(-support_[i]))));
  }
  return defect;
}

double hs_norm(const SpectralField& f, double s) {
  double sum = 0.0;
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = s == 0.0 ? 1.0 : std::pow(1.0 + f.support()[i].norm2(), s);
    sum += w * std::norm(c[i]);
  }
  return std::sqrt(sum);
}

Complex inner(const SpectralField& u, const SpectralField& v) {
  if (u.dim() != v.dim()) throw std::invalid_argument("inner: dimension mismatch");
  Complex sum{};
  const auto uc = u.coeffs();
  for (std::size_t i = 0; i < uc.size(); ++i) sum += std::conj(uc[i]) * v.at(u.support()[i]);
  return sum;
}

SpectralField project(const SpectralField& f, const IndexSet& s) {
  if (f.dim() != s.dim()) throw std::invalid_argument("project: dimension mismatch");
  std::vector<FreqIndex> keep;
  std::vector<Complex> coeffs;
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (s.contains(f.support()[i])) {
      keep.push_back(f.support()[i]);
      coeffs.push_back(c[i]);
    }
  }
  // support order is inherited, so the coefficient order stays canonical
  return SpectralField(IndexSet(f.dim(), std::move(keep)), std::move(coeffs), f.is_real());
}

SpectralField embed(const SpectralField& f, const IndexSet& s) {
  if (f.dim() != s.dim()) throw std::invalid_argument("embed: dimension mismatch");
  std::vector<Complex> coeffs(s.size());
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto pos = s.find(f.support()[i]);
    if (!pos) throw std::invalid_argument("embed: target set does not contain the field support");
    coeffs[*pos] = c[i];
  }
  return SpectralField(s, std::move(coeffs), f.is_real());
}

SpectralField combine(Complex alpha, const SpectralField& x, Complex beta, const SpectralField& y) {
  const IndexSet s = set_union(x.support(), y.support());
  std::vector<Complex> coeffs(s.size());
  for (std::size_t i = 0; i < x.size(); ++i) coeffs[*s.find(x.support()[i])] += alpha * x.coeffs()[i];
  for (std::size_t i = 0; i < y.size(); ++i) coeffs[*s.find(y.support()[i])] += beta * y.coeffs()[i];
  const bool real = x.is_real() && y.is_real() && alpha.imag() == 0.0 && beta.imag() == 0.0;
  return SpectralField(s, std::move(coeffs), real);
}

SpectralField convolve(const SpectralField& a, const SpectralField& u) {
  if (a.dim() != u.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  std::unordered_map<std::int64_t, std::size_t> slot;
  std::vector<FreqIndex> freqs;
  std::vector<Complex> acc;
  slot.reserve(a.size() + u.size());
  const auto ac = a.coeffs();
  const auto uc = u.coeffs();
  for (std::size_t j = 0; j < uc.size(); ++j) {
    const FreqIndex& gj = u.support()[j];
    for (std::size_t k = 0; k < ac.size(); ++k) {
      const FreqIndex g = gj + a.support()[k];
      const auto [it, inserted] = slot.try_emplace(g.key(), freqs.size());
      if (inserted) {
        freqs.push_back(g);
        acc.emplace_back();
      }
      acc[it->second] += ac[k] * uc[j];
    }
  }
  IndexSet support(a.dim(), freqs);
  std::vector<Complex> coeffs(support.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) coeffs[*support.find(freqs[i])] = acc[i];
  return SpectralField(std::move(support), std::move(coeffs), a.is_real() && u.is_real());
}

SpectralField multiply(const SpectralField& v_hat, const SpectralField& u_hat) {
  const double scale = basis_scale(v_hat.dim());
  std::vector<Complex> amp(v_hat.coeffs().begin(), v_hat.coeffs().end());
  for (auto& c : amp) c *= scale;
  return convolve(SpectralField(v_hat.support(), std::move(amp), v_hat.is_real()), u_hat);
}

namespace {

// exp(i g x_j) for every component value g present on the given axis
struct AxisTable {
  int lo = 0;
  int n = 0;
  std::vector<Complex> values;  // [(g - lo) * n + j]
  Complex operator()(int g, int j) const { return values[static_cast<std::size_t>(g - lo) * n + j]; }
};

AxisTable make_axis_table(const IndexSet& s, int axis, int n) {
  AxisTable t;
  t.n = n;
  int lo = 0, hi = 0;
  for (const auto& g : s) {
    lo = std::min(lo, g.c[axis]);
    hi = std::max(hi, g.c[axis]);
  }
  t.lo = lo;
  t.values.resize(static_cast<std::size_t>(hi - lo + 1) * n);
  for (int g = lo; g <= hi; ++g) {
    for (int j = 0; j < n; ++j) {
      // reduce g*j mod n first so the angle stays in [0, 2 pi)
      const long long m = ((static_cast<long long>(g) * j) % n + n) % n;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / n;
      t.values[static_cast<std::size_t>(g - lo) * n + j] = Complex(std::cos(angle), std::sin(angle));
    }
  }
  return t;
}

}  // namespace

std::vector<Complex> evaluate_on_grid(const SpectralField& f, int points_per_axis) {
  if (points_per_axis < 1) throw std::invalid_argument("evaluate_on_grid: points_per_axis must be >= 1");
  const int d = f.dim();
  const int n = points_per_axis;
  std::vector<AxisTable> tables;
  for (int axis = 0; axis < d; ++axis) tables.push_back(make_axis_table(f.support(), axis, n));
  std::size_t total = 1;
  for (int axis = 0; axis < d; ++axis) total *= static_cast<std::size_t>(n);
  std::vector<Complex> out(total);
  const double scale = basis_scale(d);
  const auto c = f.coeffs();
  std::array<int, kMaxDim> idx{};
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rem = p;
    for (int axis = d - 1; axis >= 0; --axis) {
      idx[axis] = static_cast<int>(rem % n);
      rem /= n;
    }
    Complex sum{};
    for (std::size_t i = 0; i < c.size(); ++i) {
      const FreqIndex& g = f.support()[i];
      Complex phase = tables[0](g.c[0], idx[0]);
      for (int axis = 1; axis < d; ++axis) phase *= tables[axis](g.c[axis], idx[axis]);
      sum += c[i] * phase;
    }
    out[p] = scale * sum;
  }
  return out;
}

Complex evaluate_at(const SpectralField& f, std::span<const double> x) {
  const int d = f.dim();
  if (x.size() < static_cast<std::size_t>(d)) throw std::invalid_argument("evaluate_at: point has too few coordinates");
  Complex sum{};
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    double phase = 0.0;
    for (int axis = 0; axis < d; ++axis) phase += f.support()[i].c[axis] * x[axis];
    sum += c[i] * Complex(std::cos(phase), std::sin(phase));
  }
  return basis_scale(d) * sum;
}

}  // namespace apw
