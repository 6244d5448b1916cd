#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "apw/potential.hpp"

namespace apw {

/// Galerkin matrix of -Delta + V on span{e_G : G in basis}:
/// H[G, G'] = |G|^2 delta_{GG'} + v_{G - G'} with v the amplitudes of V.
/// The mass matrix is the identity.
struct Hamiltonian {
  IndexSet basis;
  Eigen::MatrixXcd matrix;
  /// Rounding error of each diagonal entry |G|^2 + v_0 (empty: exact).
  Eigen::VectorXd diagonal_lo;
};

Hamiltonian assemble(const IndexSet& s, const Potential& V);

/// Relative gap below which neighbouring eigenvalues are treated as one group.
inline constexpr double kDegeneracyTol = 1e-9;
/// Absolute gap at the cluster edge below which a warning is raised.
inline constexpr double kClusterGapTol = 1e-8;

/// Eigenpairs k0+1 .. k0+N (1-based) of a discrete problem, ascending.
struct EigenCluster {
  IndexSet basis;
  int k0 = 0;
  std::vector<double> eigenvalues;
  /// Low-order parts: eigenvalue l is eigenvalues[l] + eigenvalue_lo[l] (double-double).
  std::vector<double> eigenvalue_lo;
  std::vector<SpectralField> vectors;
  /// lambda_{k0+1} - lambda_{k0}; lambda_{k0+1} itself when k0 = 0.
  double lower_gap = std::numeric_limits<double>::infinity();
  /// lambda_{k0+N+1} - lambda_{k0+N}; infinity when the basis has no further eigenvalue.
  double upper_gap = std::numeric_limits<double>::infinity();
  std::vector<std::string> warnings;

  std::size_t size() const { return eigenvalues.size(); }
};

/// Dense Hermitian eigendecomposition. Within numerically degenerate groups the
/// eigenvectors are rotated so that each represents a real function
/// (u_{-G} = conj(u_G)), then re-diagonalized. Signs are fixed so the first
/// largest-magnitude coefficient has positive real part. Each group is then
/// refined by Newton steps with double-double residuals, so eigenvalues and
/// vectors carry low-order parts and the Galerkin residual on the basis
/// vanishes far below double round-off.
EigenCluster solve_eigen(const Hamiltonian& h, int k0, int n_eigs);

/// Galerkin solutions of a(u, v) = (f, v) on V_s, one per right-hand side.
/// Solutions are refined with double-double residuals and carry low-order parts.
/// Throws NumericalError if the matrix is not positive definite.
std::vector<SpectralField> solve_source(const IndexSet& s, const Potential& V, std::span<const SpectralField> f);

}  // namespace apw
