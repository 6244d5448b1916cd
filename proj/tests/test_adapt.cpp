#include <cmath>

#include <gtest/gtest.h>

#include "apw/adapt.hpp"
#include "apw/verify.hpp"
#include "oracles.hpp"
#include "support.hpp"

using apw::AdaptiveConfig;
using apw::FreqIndex;
using apw::IndexSet;
using apw::Mode;
using apw::SpectralField;
using apw::Termination;

namespace {

FreqIndex f1(int a) { return FreqIndex::of({a}); }

AdaptiveConfig cos_config() {
  AdaptiveConfig c;
  c.dim = 1;
  c.theta_tilde = 0.5;
  c.zeta = 0.2;
  c.tol = 1e-6;
  c.M0 = 1;
  c.n_eigs = 1;
  return c;
}

apw::Potential decaying_potential() {
  std::vector<testing_support::Cosine> terms;
  for (int k = 1; k <= 10; ++k) terms.push_back({f1(k), 0.9 * std::pow(1.0 + k * k, -1.25)});
  return testing_support::trig_potential(2.0, terms, 1);
}

// Wide support with fast coefficient decay: truncation pays off.
apw::Potential wide_potential() {
  std::vector<testing_support::Cosine> terms;
  for (int k = 1; k <= 30; ++k) terms.push_back({f1(k), std::pow(1.0 + k * k, -3.0)});
  return testing_support::trig_potential(2.0, terms, 1);
}

bool is_subset(const IndexSet& a, const IndexSet& b) {
  for (const auto& g : a) {
    if (!b.contains(g)) return false;
  }
  return true;
}

void expect_loop_invariants(const apw::EigenRun& run, double zeta, double tol) {
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& r = run.records[i];
    EXPECT_EQ(r.n, static_cast<int>(i));
    EXPECT_EQ(r.index_set_size, run.index_sets[i].size());
    EXPECT_TRUE(apw::validate_symmetric(run.index_sets[i]));
    EXPECT_LT(r.galerkin_defect, 1e-9);
    if (i == 0) continue;
    const auto& p = run.records[i - 1];
    EXPECT_GT(r.index_set_size, p.index_set_size);
    EXPECT_TRUE(is_subset(run.index_sets[i - 1], run.index_sets[i]));
    for (std::size_t l = 0; l < r.values.size(); ++l) EXPECT_LE(r.values[l], p.values[l] + 1e-12);
  }
  if (run.reason == Termination::Tol) {
    const auto& last = run.records.back();
    EXPECT_LE(last.eta_exact, (1 + zeta) * last.eta_tilde * (1 + 1e-12));
    EXPECT_LT(last.eta_exact, tol);
  }
}

}  // namespace

TEST(RunEigen, ConstantPotentialIsExactAtStart) {
  AdaptiveConfig c;
  c.M0 = 2;
  c.n_eigs = 1;
  c.tol = 1e-8;
  const auto run = apw::run_eigen(c, apw::Potential::constant(1.0, 1));
  ASSERT_EQ(run.records.size(), 1u);
  EXPECT_EQ(run.reason, Termination::Exact);
  EXPECT_EQ(run.records[0].eta_tilde, 0.0);
  EXPECT_EQ(run.final_cluster.eigenvalues[0], 1.0);
}

TEST(RunEigen, OnePlusCosConvergesToTolerance) {
  const AdaptiveConfig c = cos_config();
  const auto run = apw::run_eigen(c, testing_support::one_plus_cos());
  EXPECT_EQ(run.reason, Termination::Tol);
  for (std::size_t i = 1; i < run.records.size(); ++i) {
    EXPECT_LT(run.records[i].eta_tilde, run.records[i - 1].eta_tilde);
  }
  const Eigen::VectorXd ref =
      oracle::reference_eigenvalues(testing_support::trig_function(1.0, {{f1(1), 1.0}}), 64, 1, 160);
  EXPECT_NEAR(run.final_cluster.eigenvalues[0], ref(0), 1e-6);
  expect_loop_invariants(run, c.zeta, c.tol);
}

TEST(RunEigen, ZeroToleranceRunsTheIterationBudget) {
  AdaptiveConfig c = cos_config();
  c.tol = 0.0;
  c.max_iter = 15;
  // algebraically decaying coefficients keep the error above round-off for 15 steps
  const apw::Potential V = decaying_potential();
  std::vector<double> lambdas;
  const auto run = apw::run_eigen(c, V, [&](const apw::IterationRecord& r, const apw::EigenCluster& cl) {
    EXPECT_EQ(r.values, cl.eigenvalues);
    lambdas.push_back(cl.eigenvalues[0]);
  });
  EXPECT_EQ(run.reason, Termination::MaxIter);
  ASSERT_EQ(run.records.size(), 16u);  // n = 0 .. 15
  ASSERT_EQ(lambdas.size(), 16u);
  EXPECT_EQ(run.marks.size(), 15u);
  const auto ref = apw::reference_solve(V, 0, 1, 64);
  EXPECT_LT(lambdas[15] - ref.cluster.eigenvalues[0], lambdas[5] - ref.cluster.eigenvalues[0]);
  expect_loop_invariants(run, c.zeta, c.tol);
}

TEST(RunEigen, ExactAndVanishingZetaFeasibleAgree) {
  AdaptiveConfig c = cos_config();
  c.tol = 1e-9;
  c.n_eigs = 2;
  c.M0 = 2;
  c.max_iter = 25;
  const apw::Potential V = decaying_potential();
  AdaptiveConfig exact = c;
  exact.mode = Mode::EigenExact;
  AdaptiveConfig feasible = c;
  feasible.zeta = 1e-14;
  const auto a = apw::run_eigen(exact, V), b = apw::run_eigen(feasible, V);
  ASSERT_EQ(a.index_sets.size(), b.index_sets.size());
  for (std::size_t i = 0; i < a.index_sets.size(); ++i) EXPECT_EQ(a.index_sets[i], b.index_sets[i]);
  expect_loop_invariants(a, 0.0, c.tol);
  expect_loop_invariants(b, feasible.zeta, c.tol);
}

TEST(RunEigen, FeasibleSandwichEveryIteration) {
  AdaptiveConfig c = cos_config();
  c.zeta = 0.4;
  c.theta_tilde = 0.7;
  c.n_eigs = 2;
  c.M0 = 2;
  c.tol = 1e-9;
  c.max_iter = 30;
  const auto run = apw::run_eigen(c, wide_potential());
  bool truncated = false;
  for (const auto& r : run.records) {
    EXPECT_LE((1 - c.zeta) * r.eta_tilde, r.eta_exact * (1 + 1e-12));
    EXPECT_LE(r.eta_exact, (1 + c.zeta) * r.eta_tilde * (1 + 1e-12));
    truncated = truncated || r.zeta_actual > 0.0;
  }
  EXPECT_TRUE(truncated);
  expect_loop_invariants(run, c.zeta, c.tol);
}

TEST(RunEigen, Reproducible) {
  AdaptiveConfig c = cos_config();
  c.n_eigs = 2;
  c.tol = 1e-10;
  const apw::Potential V = decaying_potential();
  const auto a = apw::run_eigen(c, V), b = apw::run_eigen(c, V);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].values, b.records[i].values);
    EXPECT_EQ(a.records[i].eta_tilde, b.records[i].eta_tilde);
    EXPECT_EQ(a.index_sets[i], b.index_sets[i]);
  }
}

TEST(RunEigen, DofBudget) {
  AdaptiveConfig c = cos_config();
  c.tol = 0.0;
  c.max_dof = 9;
  const auto run = apw::run_eigen(c, decaying_potential());
  EXPECT_EQ(run.reason, Termination::MaxDof);
  EXPECT_LE(run.records.back().index_set_size, 9u);
}

TEST(RunEigen, AdmissibilityIsAWarningOnly) {
  AdaptiveConfig c = cos_config();
  c.theta_tilde = 0.9;
  c.zeta = 0.1;
  const apw::Potential V = testing_support::trig_potential(3.0, {{f1(1), 1.0}}, 1);
  const auto adm = apw::check_admissibility(c, V);
  EXPECT_NEAR(adm.theta_bound, std::sqrt(1.0 / (3.0 * 4.0)), 1e-9);
  EXPECT_FALSE(adm.theta_ok);
  const auto run = apw::run_eigen(c, V);
  EXPECT_FALSE(run.warnings.empty());
  EXPECT_EQ(run.reason, Termination::Tol);
}

TEST(Validate, RejectsBadParameters) {
  auto bad = [](auto mutate) {
    AdaptiveConfig c;
    mutate(c);
    return c;
  };
  EXPECT_NO_THROW(apw::validate(AdaptiveConfig{}));
  EXPECT_THROW(apw::validate(bad([](AdaptiveConfig& c) { c.theta_tilde = 1.0; })), std::invalid_argument);
  EXPECT_THROW(apw::validate(bad([](AdaptiveConfig& c) { c.zeta = 0.6; })), std::invalid_argument);
  EXPECT_THROW(apw::validate(bad([](AdaptiveConfig& c) { c.tol = -1; })), std::invalid_argument);
  EXPECT_THROW(apw::validate(bad([](AdaptiveConfig& c) { c.M0 = 0; })), std::invalid_argument);
  EXPECT_THROW(apw::validate(bad([](AdaptiveConfig& c) { c.n_eigs = 0; })), std::invalid_argument);
  EXPECT_THROW(apw::validate(bad([](AdaptiveConfig& c) { c.dim = 4; })), std::invalid_argument);
  EXPECT_EQ(apw::parse_mode("eigen-exact"), Mode::EigenExact);
  EXPECT_THROW(apw::parse_mode("fast"), std::invalid_argument);
}

TEST(RunSource, ConstantPotentialGroundMode) {
  AdaptiveConfig c;
  c.mode = Mode::Source;
  c.theta_tilde = 0.9;
  const double cst = 2.0;
  const std::vector<SpectralField> F{SpectralField::basis_function(FreqIndex{}, 1)};
  const auto run = apw::run_source(c, apw::Potential::constant(cst, 1), F);
  ASSERT_EQ(run.records.size(), 2u);
  EXPECT_EQ(run.marks[0].marked, IndexSet(1, {FreqIndex{}}));
  // the refined solve is exact to double-double precision, not bit-exact
  EXPECT_EQ(run.reason, Termination::Tol);
  EXPECT_NEAR(std::abs(run.solutions[0].at(FreqIndex{}) - 1.0 / cst), 0.0, 1e-15);
  EXPECT_EQ(run.records[0].eta_exact, 1.0);
  EXPECT_LT(run.records[1].eta_exact, 1e-30);
}

TEST(RunSource, ConstantPotentialFirstMode) {
  AdaptiveConfig c;
  c.mode = Mode::Source;
  const std::vector<SpectralField> F{SpectralField::basis_function(f1(1), 1)};
  const auto run = apw::run_source(c, apw::Potential::constant(2.0, 1), F);
  ASSERT_EQ(run.records.size(), 2u);
  EXPECT_EQ(run.marks[0].marked, IndexSet(1, {f1(1), f1(-1)}));
  EXPECT_EQ(run.reason, Termination::Tol);
  EXPECT_LT(run.records[1].eta_exact, 1e-30);
}

TEST(RunSource, OnePlusCosContractsInEnergy) {
  AdaptiveConfig c;
  c.mode = Mode::Source;
  c.theta_tilde = 0.6;
  c.tol = 1e-12;
  const apw::Potential V = testing_support::one_plus_cos();
  const std::vector<SpectralField> F{SpectralField::basis_function(FreqIndex{}, 1)};
  const auto ref = apw::reference_source_solve(V, F, 64);
  std::vector<double> err;
  const auto run = apw::run_source(c, V, F, [&](const apw::IterationRecord& r, std::span<const SpectralField> u) {
    EXPECT_EQ(r.index_set_size, u[0].size());
    err.push_back(apw::energy_error(ref, u, V));
  });
  EXPECT_EQ(run.reason, Termination::Tol);
  ASSERT_GE(err.size(), 5u);
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_LT(err[i], err[i - 1]);
  const auto fit = apw::fit_rates(run.records, err);
  EXPECT_TRUE(fit.contracting);
  EXPECT_GT(fit.r2_alpha, 0.9);
  for (const auto& r : run.records) EXPECT_LT(r.galerkin_defect, 1e-9);
}
