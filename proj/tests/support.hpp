#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "apw/potential.hpp"
#include "oracles.hpp"

namespace testing_support {

inline std::vector<oracle::Freq> freqs_of(const apw::IndexSet& s) {
  std::vector<oracle::Freq> out;
  for (const auto& g : s) out.emplace_back(g.c.begin(), g.c.begin() + s.dim());
  return out;
}

struct Cosine {
  apw::FreqIndex k;
  double a;
};

// V = c + sum a cos(k.x), through its Fourier-series amplitudes.
inline apw::Potential trig_potential(double c, const std::vector<Cosine>& terms, int dim) {
  std::vector<apw::FreqIndex> support{apw::FreqIndex{}};
  std::vector<apw::Complex> amp{c};
  for (const auto& t : terms) {
    support.push_back(t.k);
    amp.emplace_back(t.a / 2);
    support.push_back(-t.k);
    amp.emplace_back(t.a / 2);
  }
  apw::IndexSet s(dim, support);
  std::vector<apw::Complex> ordered(s.size());
  for (std::size_t i = 0; i < support.size(); ++i) ordered[*s.find(support[i])] += amp[i];
  return apw::Potential::from_amplitudes(apw::SpectralField(s, ordered, true));
}

inline oracle::Func trig_function(double c, const std::vector<Cosine>& terms) {
  return [c, terms](const std::vector<double>& x) {
    double v = c;
    for (const auto& t : terms) {
      double kx = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) kx += t.k.c[a] * x[a];
      v += t.a * std::cos(kx);
    }
    return v;
  };
}

inline apw::Potential one_plus_cos() { return trig_potential(1.0, {{apw::FreqIndex::of({1}), 1.0}}, 1); }

inline Eigen::MatrixXcd columns(const std::vector<apw::SpectralField>& fs, const apw::IndexSet& basis) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis.size()),
                                              static_cast<Eigen::Index>(fs.size()));
  for (std::size_t j = 0; j < fs.size(); ++j) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fs[j].at(basis[i]);
    }
  }
  return m;
}

}  // namespace testing_support
