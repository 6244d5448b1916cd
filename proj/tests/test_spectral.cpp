#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "apw/potential.hpp"
#include "oracles.hpp"
#include "support.hpp"

using apw::Complex;
using apw::FreqIndex;
using apw::IndexSet;
using apw::SpectralField;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

FreqIndex f1(int a) { return FreqIndex::of({a}); }

SpectralField pm1_field(Complex value) { return SpectralField(IndexSet(1, {f1(-1), f1(1)}), {value, value}, true); }

// Random field on ball(M, d), Hermitian-symmetric when `real`.
SpectralField random_field(int M, int d, std::mt19937_64& gen, bool real = true) {
  const IndexSet s = apw::ball(M, d);
  std::normal_distribution<double> nd;
  std::vector<Complex> c(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto j = *s.find(-s[i]);
    if (real && j < i) {
      c[i] = std::conj(c[j]);
    } else if (real && j == i) {
      c[i] = nd(gen);
    } else {
      c[i] = Complex(nd(gen), nd(gen));
    }
  }
  return SpectralField(s, c, real);
}

double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
  double d = 0.0;
  for (const auto& g : a.support()) d = std::max(d, std::abs(a.at(g) - b.at(g)));
  for (const auto& g : b.support()) d = std::max(d, std::abs(a.at(g) - b.at(g)));
  return d;
}

}  // namespace

TEST(HsNorm, Examples) {
  const SpectralField e0 = SpectralField::basis_function(FreqIndex{}, 1);
  for (double s : {-1.0, 0.0, 0.5, 2.0}) EXPECT_DOUBLE_EQ(apw::hs_norm(e0, s), 1.0);
  EXPECT_DOUBLE_EQ(apw::hs_norm(pm1_field(1.0), 1.0), 2.0);
  EXPECT_DOUBLE_EQ(apw::hs_norm(pm1_field(1.0), -1.0), 1.0);
}

TEST(HsNorm, ParsevalOnRandomFields) {
  std::mt19937_64 gen(5);
  for (int d = 1; d <= 3; ++d) {
    const SpectralField f = random_field(3, d, gen);
    double sq = 0.0;
    for (const auto& c : f.coeffs()) sq += std::norm(c);
    EXPECT_NEAR(apw::hs_norm(f, 0.0) * apw::hs_norm(f, 0.0), sq, 1e-14 * sq);
    // L2 norm against quadrature of |f(x)|^2 on a fine enough grid
    const int n = 8;
    const double w = std::pow(2.0 * std::numbers::pi / n, d);
    double quad = 0.0;
    for (const auto& x : oracle::grid(n, d)) quad += w * std::norm(apw::evaluate_at(f, x));
    EXPECT_NEAR(quad, sq, 1e-11 * sq);
  }
}

TEST(Project, Examples) {
  std::mt19937_64 gen(1);
  const SpectralField f = random_field(2, 1, gen);
  EXPECT_EQ(max_coeff_diff(apw::project(f, f.support()), f), 0.0);
  EXPECT_EQ(apw::project(SpectralField::basis_function(f1(1), 1), IndexSet(1, {f1(0)})).size(), 0u);

  const SpectralField g(apw::ball(1, 1), {2.0, 1.0, 1.0}, true);
  const SpectralField p = apw::project(g, IndexSet(1, {f1(-1), f1(1)}));
  EXPECT_EQ(p.at(f1(0)), Complex{});
  EXPECT_EQ(p.at(f1(1)), Complex(1.0));
  EXPECT_NEAR(apw::hs_norm(g, 0) * apw::hs_norm(g, 0) - apw::hs_norm(p, 0) * apw::hs_norm(p, 0), 4.0, 1e-14);
}

TEST(Project, IdempotentAndNonExpansive) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const SpectralField f = random_field(4, 2, gen);
    const IndexSet s = apw::ball(trial % 4, 2);
    const SpectralField p = apw::project(f, s);
    EXPECT_EQ(max_coeff_diff(apw::project(p, s), p), 0.0);
    for (double t : {-1.0, 0.0, 1.0, 2.0}) EXPECT_LE(apw::hs_norm(p, t), apw::hs_norm(f, t));
  }
}

TEST(Multiply, ConstantActsDiagonally) {
  const double c = 1.7;
  const SpectralField v(IndexSet(1, {FreqIndex{}}), {c * kSqrt2Pi}, true);
  const SpectralField w = apw::multiply(v, SpectralField::basis_function(FreqIndex{}, 1));
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NEAR(std::abs(w.at(FreqIndex{}) - c), 0.0, 1e-15);
}

TEST(Multiply, CosinePotentialOnGroundMode) {
  const double c = 1.3, beta = 0.4;
  const SpectralField v(apw::ball(1, 1), {c * kSqrt2Pi, beta * kSqrt2Pi, beta * kSqrt2Pi}, true);
  const SpectralField w = apw::multiply(v, SpectralField::basis_function(FreqIndex{}, 1));
  EXPECT_NEAR(std::abs(w.at(f1(0)) - c), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.at(f1(1)) - beta), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.at(f1(-1)) - beta), 0.0, 1e-15);
  EXPECT_EQ(w.size(), 3u);
}

TEST(Multiply, ZeroGivesZero) {
  std::mt19937_64 gen(3);
  const SpectralField z(apw::ball(1, 1), {0.0, 0.0, 0.0}, true);
  const SpectralField w = apw::multiply(z, random_field(2, 1, gen));
  for (const auto& c : w.coeffs()) EXPECT_EQ(c, Complex{});
}

TEST(Multiply, MatchesGridProductOracle) {
  std::mt19937_64 gen(4);
  for (int d = 1; d <= 2; ++d) {
    const SpectralField v = random_field(2, d, gen);
    const SpectralField u = random_field(3, d, gen, false);
    const SpectralField w = apw::multiply(v, u);
    // the product has degree <= 5 per axis; 12 points resolve it exactly
    const auto vf = testing_support::freqs_of(v.support());
    const auto uf = testing_support::freqs_of(u.support());
    const std::vector<Complex> vc(v.coeffs().begin(), v.coeffs().end()), uc(u.coeffs().begin(), u.coeffs().end());
    auto product = [&](const std::vector<double>& x) {
      return oracle::direct_sum(vf, vc, x) * oracle::direct_sum(uf, uc, x);
    };
    double scale = 0.0;
    for (const auto& c : w.coeffs()) scale = std::max(scale, std::abs(c));
    const auto wf = testing_support::freqs_of(w.support());
    for (std::size_t i = 0; i < wf.size(); ++i) {
      EXPECT_NEAR(std::abs(oracle::project_onto(wf[i], product, 12) - w.coeffs()[i]), 0.0, 1e-12 * scale);
    }
    // and nothing outside the Minkowski sum
    oracle::Freq far(static_cast<std::size_t>(d), 0);
    far[0] = 6;
    EXPECT_NEAR(std::abs(oracle::project_onto(far, product, 16)), 0.0, 1e-12 * scale);
  }
}

TEST(Multiply, BilinearCommutativeHermitian) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField a = random_field(2, 2, gen), b = random_field(3, 2, gen), c = random_field(1, 2, gen);
    const SpectralField ab = apw::multiply(a, b);
    double scale = 0.0;
    for (const auto& x : ab.coeffs()) scale = std::max(scale, std::abs(x));
    EXPECT_LE(max_coeff_diff(ab, apw::multiply(b, a)), 1e-14 * scale);
    EXPECT_LE(ab.hermitian_defect(), 1e-14 * scale);
    const Complex s(0.3, -1.1);
    const SpectralField lhs = apw::multiply(a, apw::combine(s, b, 1.0, c));
    const SpectralField rhs = apw::combine(s, apw::multiply(a, b), 1.0, apw::multiply(a, c));
    EXPECT_LE(max_coeff_diff(lhs, rhs), 1e-13 * scale);
  }
}

TEST(EvaluateOnGrid, Examples) {
  for (int d = 1; d <= 3; ++d) {
    const auto vals = apw::evaluate_on_grid(SpectralField::basis_function(FreqIndex{}, d), 3);
    ASSERT_EQ(vals.size(), static_cast<std::size_t>(std::pow(3, d)));
    for (const auto& v : vals) EXPECT_NEAR(std::abs(v - std::pow(2 * std::numbers::pi, -0.5 * d)), 0.0, 1e-15);
  }
  const auto cosx = apw::evaluate_on_grid(pm1_field(kSqrt2Pi / 2), 16);
  for (int j = 0; j < 16; ++j) {
    EXPECT_NEAR(cosx[static_cast<std::size_t>(j)].real(), std::cos(2 * std::numbers::pi * j / 16), 1e-14);
    EXPECT_NEAR(cosx[static_cast<std::size_t>(j)].imag(), 0.0, 1e-14);
  }
}

TEST(EvaluateOnGrid, MatchesDirectSumAtRandomPoints) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> ux(0.0, 2 * std::numbers::pi);
  for (int d = 1; d <= 3; ++d) {
    const SpectralField f = random_field(3, d, gen);
    const auto ff = testing_support::freqs_of(f.support());
    const std::vector<Complex> fc(f.coeffs().begin(), f.coeffs().end());
    for (int p = 0; p < 10; ++p) {
      std::vector<double> x(static_cast<std::size_t>(d));
      for (auto& xi : x) xi = ux(gen);
      const Complex got = apw::evaluate_at(f, x), want = oracle::direct_sum(ff, fc, x);
      EXPECT_NEAR(std::abs(got - want), 0.0, 1e-12 * std::max(1.0, std::abs(want)));
      EXPECT_LE(std::abs(got.imag()), 1e-12 * std::max(1.0, std::abs(got)));
    }
    // grid values agree with point evaluation
    const auto g = apw::evaluate_on_grid(f, 5);
    const auto pts = oracle::grid(5, d);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_NEAR(std::abs(g[i] - oracle::direct_sum(ff, fc, pts[i])), 0.0, 1e-12 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST(AInner, Examples) {
  const double c = 2.5, beta = 0.3;
  const apw::Potential Vc = apw::Potential::constant(c, 1);
  const SpectralField e0 = SpectralField::basis_function(FreqIndex{}, 1);
  const SpectralField e1 = SpectralField::basis_function(f1(1), 1);
  EXPECT_NEAR(std::abs(apw::a_inner(e0, e0, Vc) - c), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(apw::a_inner(e1, e1, Vc) - (1 + c)), 0.0, 1e-14);
  const apw::Potential Vb = testing_support::trig_potential(c, {{f1(1), 2 * beta}}, 1);
  EXPECT_NEAR(std::abs(apw::a_inner(e0, e1, Vb) - beta), 0.0, 1e-14);
}

TEST(AInner, HermitianAndCoercive) {
  std::mt19937_64 gen(9);
  const apw::Potential V =
      testing_support::trig_potential(2.0, {{FreqIndex::of({1, 0}), 0.6}, {FreqIndex::of({1, 1}), 0.5}}, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const SpectralField u = random_field(3, 2, gen, false), v = random_field(2, 2, gen, false);
    const Complex uv = apw::a_inner(u, v, V), vu = apw::a_inner(v, u, V);
    EXPECT_NEAR(std::abs(uv - std::conj(vu)), 0.0, 1e-12 * std::abs(uv));
    const Complex uu = apw::a_inner(u, u, V);
    EXPECT_NEAR(uu.imag(), 0.0, 1e-12 * uu.real());
    const double l2 = apw::hs_norm(u, 0);
    EXPECT_GE(uu.real(), V.nu_lower() * l2 * l2);
    EXPECT_NEAR(apw::energy_norm(u, V), std::sqrt(uu.real()), 1e-12 * std::sqrt(uu.real()));
  }
}

TEST(Potential, BoundsFromSampling) {
  const apw::Potential V = testing_support::one_plus_cos();
  EXPECT_NEAR(V.nu_lower(), 0.0, 1e-11);
  EXPECT_FALSE(V.strictly_positive());
  // bounds are padded outward by a relative 1e-12
  EXPECT_GE(V.nu_upper(), 2.0);
  EXPECT_LE(V.nu_upper(), 2.0 + 1e-11);
  EXPECT_NEAR(V.mean(), 1.0, 1e-15);
  EXPECT_EQ(V.support_radius(), 1);

  const apw::Potential W = testing_support::trig_potential(3.0, {{f1(2), 1.0}}, 1);
  EXPECT_TRUE(W.strictly_positive());
  EXPECT_NEAR(W.nu_lower(), 2.0, 1e-10);
  EXPECT_NEAR(W.nu_upper(), 4.0, 1e-10);
  EXPECT_DOUBLE_EQ(W.alpha_lower(), 1.0);
  EXPECT_DOUBLE_EQ(W.alpha_upper(), W.nu_upper());
}

TEST(Potential, ViewsAgree) {
  const apw::Potential V = testing_support::trig_potential(1.5, {{f1(1), 0.5}, {f1(3), 0.25}}, 1);
  for (const auto& g : V.field().support()) {
    EXPECT_NEAR(std::abs(V.field().at(g) - kSqrt2Pi * V.amplitudes().at(g)), 0.0, 1e-15);
  }
  EXPECT_NEAR(V.l1_total(), kSqrt2Pi * (1.5 + 0.5 + 0.25), 1e-13);
  EXPECT_NEAR(V.amplitude_tail_l1(1), 0.25, 1e-15);
  EXPECT_EQ(V.amplitude_tail_l1(3), 0.0);
}

TEST(Potential, RejectsNegativeOrComplex) {
  EXPECT_THROW(apw::Potential::constant(-1.0, 1), std::invalid_argument);
  EXPECT_THROW(testing_support::trig_potential(0.5, {{f1(1), 1.0}}, 1), std::invalid_argument);
  const SpectralField skew(apw::ball(1, 1), {3.0, Complex(0, 1), Complex(0, 1)}, true);
  EXPECT_THROW(apw::Potential::from_amplitudes(skew), std::invalid_argument);
}
