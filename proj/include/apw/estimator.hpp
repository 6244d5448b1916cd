#pragma once

#include <span>
#include <vector>

#include "apw/potential.hpp"

namespace apw {

/// Residual of an approximate solution, with per-frequency estimator weights.
struct Residual {
  SpectralField field;
  /// Certified bound on the H^{-1} norm of whatever was discarded by truncating V.
  double truncation_bound = 0.0;
  /// |r_G|^2 / (1 + |G|^2), aligned with field.support().
  std::vector<double> per_frequency;
};

/// r = lambda u + Delta u - V u, exact for finite-support V. Accumulated in
/// double-double using the low-order parts of u and lambda_lo, then rounded.
Residual residual(const SpectralField& u, double lambda, const Potential& V, double lambda_lo = 0.0);

/// Residual with V replaced by its truncation to ball(M). The bound is
/// (2 pi)^{-d/2} sum_{|K|>M} |V_K| ||u||_L2, which dominates ||(V - Pi_M V) u||_{H^-1}.
Residual truncated_residual(const SpectralField& u, double lambda, const Potential& V, int M, double lambda_lo = 0.0);

/// r = f - (-Delta + V) w, accumulated like residual().
Residual source_residual(const SpectralField& w, const SpectralField& f, const Potential& V);

/// sqrt of the summed per-frequency weights over the whole residual support.
double eta(const Residual& r);
/// Same, restricted to `subset`.
double eta(const Residual& r, const IndexSet& subset);

/// Root-sum-square over cluster members.
double eta_cluster(std::span<const Residual> rs);
double eta_cluster(std::span<const Residual> rs, const IndexSet& subset);

/// Largest |r_G| over G in `on` divided by the largest |r_G| overall (0 for a zero residual).
double galerkin_defect(const Residual& r, const IndexSet& on);

/// Estimator contribution of a frequency pair {G, -G}, summed over cluster members.
struct PairContribution {
  FreqIndex rep;  ///< pair_representative(G)
  double value = 0.0;
};

struct EstimatorValue {
  double total = 0.0;  ///< eta over everything
  std::vector<PairContribution> per_pair;  ///< pairs outside the current set, canonical order of rep
  double on_set_sq = 0.0;  ///< squared contribution from inside the current set
  double zeta_actual = 0.0;
};

/// Splits the squared cluster estimator into off-set pair contributions and the on-set rest.
EstimatorValue estimator_breakdown(std::span<const Residual> rs, const IndexSet& current);

struct TruncationChoice {
  int M = 0;
  std::vector<Residual> residuals;
  double eta_tilde = 0.0;
  /// Root-sum-square of the member truncation bounds.
  double bound = 0.0;
  double zeta_actual = 0.0;
};

/// Doubles M, starting from `start_M`, until the aggregated certified bound is at
/// most zeta * eta_tilde. Terminates at the support radius of V at the latest,
/// where the residual is exact and the bound is zero.
TruncationChoice choose_truncation(std::span<const SpectralField> U, std::span<const double> lambdas,
                                   const Potential& V, double zeta, int start_M = 1,
                                   std::span<const double> lambda_lo = {});

}  // namespace apw
