#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apw/adapt.hpp"

namespace apw {

/// Dense solve on ball(M_ref); stands in for the exact cluster.
struct ReferenceSolution {
  IndexSet basis;
  int M_ref = 0;
  Eigen::MatrixXcd matrix;  ///< Galerkin matrix on basis, kept for energy products
  EigenCluster cluster;
  double eigenvalue_tail_gap = 0.0;  ///< lambda_{k0+N+1} - lambda_{k0+N}
  double lower_gap = 0.0;
  std::vector<std::string> warnings;
};

ReferenceSolution reference_solve(const Potential& V, int k0, int n_eigs, int M_ref);

/// Change of the reference when M_ref is doubled.
struct SelfCheck {
  int M_ref = 0;
  double max_eigenvalue_change = 0.0;
  double subspace_change = 0.0;
};

SelfCheck reference_self_check(const ReferenceSolution& ref, const Potential& V);

/// Energy-norm gap between span X and span Y: max of the two directed
/// distances sup_{u in X, |u|_a = 1} inf_{v in Y} |u - v|_a.
///
/// Both bases are a-orthonormalized through their energy Gram matrices. The
/// directed distance is evaluated as the largest a-norm of (I - P_Y) Q_X rather
/// than sqrt(1 - sigma_min^2); the two agree mathematically, but the latter
/// loses everything below ~1e-8 to cancellation. Throws NumericalError if a
/// Gram matrix has condition number above 1e12.
double subspace_distance(std::span<const SpectralField> X, std::span<const SpectralField> Y, const Potential& V);

/// Half-open ranges [begin, end) of numerically equal eigenvalues; neighbours
/// closer than rel_tol * max(1, |lambda|) share a group.
std::vector<std::pair<std::size_t, std::size_t>> eigenvalue_groups(std::span<const double> eigenvalues,
                                                                    double rel_tol = 1e-6);

struct ClusterDistance {
  double total = 0.0;  ///< root-sum-square of the group distances
  std::vector<double> per_group;
};

/// Group-wise distance between the reference eigenspaces and the discrete cluster,
/// groups taken from the reference eigenvalues.
ClusterDistance cluster_distance(const ReferenceSolution& ref, const EigenCluster& cluster, const Potential& V);

/// lambda_{G,l} - lambda_ref,l for every member. For members whose reference
/// eigenvalue is simple, the exact identity
///   lambda_G - lambda = a(e, e) - lambda (e, e),  e = u_G - u_ref (aligned),
/// is used; it stays accurate far below the round-off of the plain difference.
/// Members of multiple groups fall back to the plain difference. Throws
/// std::invalid_argument if the cluster basis is not inside the reference basis.
std::vector<double> eigenvalue_errors(const ReferenceSolution& ref, const EigenCluster& cluster, const Potential& V);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares. r2 is 1 when the data are fitted exactly.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct RateFit {
  double alpha_hat = 0.0;  ///< exp(slope) of log(error) against n
  double s_hat = 0.0;      ///< -slope of log(error) against log(|G_n| - |G_0|)
  double r2_alpha = 0.0;
  double r2_s = 0.0;
  bool exact = false;        ///< some error vanished; nothing fitted
  bool contracting = false;  ///< alpha_hat < 1
  bool s_available = false;  ///< at least two records with |G_n| > |G_0|
};

/// Fits both rates, dropping the first `skip` records. Throws
/// std::invalid_argument with fewer than 4 records or mismatched sizes.
RateFit fit_rates(std::span<const IterationRecord> records, std::span<const double> errors, int skip = 1);

struct GapCheck {
  bool ok = false;
  double lower_gap = 0.0;
  double upper_gap = 0.0;
};

/// True iff both cluster boundary gaps exceed 1e-8 relative (no lower boundary when k0 = 0).
GapCheck eigenvalue_gap_check(const ReferenceSolution& ref);

/// Galerkin source solutions on ball(M_ref).
std::vector<SpectralField> reference_source_solve(const Potential& V, std::span<const SpectralField> F, int M_ref);

/// Root-sum-square of |u_i - w_i|_a.
double energy_error(std::span<const SpectralField> reference, std::span<const SpectralField> approx,
                    const Potential& V);

}  // namespace apw
