#include "apw/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <stdexcept>

#include "apw/errors.hpp"
#include "dd.hpp"

namespace apw {

Hamiltonian assemble(const IndexSet& s, const Potential& V) {
  if (s.dim() != V.dim()) throw std::invalid_argument("assemble: dimension mismatch");
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXd diag_lo = Eigen::VectorXd::Zero(n);
  const SpectralField& amp = V.amplitudes();
  // column j couples to G_j + K for every K in supp V
  for (Eigen::Index j = 0; j < n; ++j) {
    const FreqIndex& gj = s[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < amp.size(); ++k) {
      if (const auto i = s.find(gj + amp.support()[k])) h(static_cast<Eigen::Index>(*i), j) = amp.coeffs()[k];
    }
    const dd::Real d = dd::two_sum(h(j, j).real(), static_cast<double>(gj.norm2()));
    h(j, j).real(d.hi);
    diag_lo(j) = d.lo;
  }
  return {s, std::move(h), std::move(diag_lo)};
}

namespace {

// Position of -G for every G of a symmetric basis.
std::vector<std::size_t> negation_map(const IndexSet& basis) {
  std::vector<std::size_t> neg(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto j = basis.find(-basis[i]);
    if (!j) throw std::invalid_argument("eigensolve requires a basis closed under negation");
    neg[i] = *j;
  }
  return neg;
}

// Real coordinates of a conjugation-invariant vector w (w_{-G} = conj(w_G)):
// Re w_0 for G = 0, and sqrt(2) (Re w_G, Im w_G) for each pair representative.
// Euclidean products of these coordinates equal the complex inner products.
Eigen::VectorXd to_real_coords(const Eigen::VectorXcd& w, const std::vector<std::size_t>& neg) {
  Eigen::VectorXd r(w.size());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < neg.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (neg[i] == i) {
      r(row++) = w(ii).real();
    } else if (i < neg[i]) {
      r(row++) = std::numbers::sqrt2 * w(ii).real();
      r(row++) = std::numbers::sqrt2 * w(ii).imag();
    }
  }
  return r;
}

Eigen::VectorXcd from_real_coords(const Eigen::VectorXd& r, const std::vector<std::size_t>& neg) {
  Eigen::VectorXcd w(r.size());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < neg.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (neg[i] == i) {
      w(ii) = r(row++);
    } else if (i < neg[i]) {
      const Complex c(r(row) / std::numbers::sqrt2, r(row + 1) / std::numbers::sqrt2);
      row += 2;
      w(ii) = c;
      w(static_cast<Eigen::Index>(neg[i])) = std::conj(c);
    }
  }
  return w;
}

void fix_sign(Eigen::Ref<Eigen::VectorXcd> v) {
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= (1.0 - 1e-8) * vmax) {
      const bool flip = std::abs(v(i).real()) > 1e-12 * vmax ? v(i).real() < 0.0 : v(i).imag() < 0.0;
      if (flip) v = -v;
      return;
    }
  }
}

// Replaces the columns of `group` (an invariant subspace of h) by real-function
// Ritz vectors and returns the Ritz values.
Eigen::VectorXd realify_group(const Eigen::MatrixXcd& h, Eigen::MatrixXcd& group, const std::vector<std::size_t>& neg) {
  const Eigen::Index n = group.rows();
  const Eigen::Index q = group.cols();
  Eigen::MatrixXd cand(n, 2 * q);
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::VectorXcd cq(n);
    for (Eigen::Index i = 0; i < n; ++i) cq(i) = std::conj(group(static_cast<Eigen::Index>(neg[i]), j));
    const Eigen::VectorXcd even = 0.5 * (group.col(j) + cq);
    const Eigen::VectorXcd odd = (group.col(j) - cq) / Complex(0.0, 2.0);
    cand.col(2 * j) = to_real_coords(even, neg);
    cand.col(2 * j + 1) = to_real_coords(odd, neg);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cand, Eigen::ComputeThinU);
  Eigen::MatrixXcd basis(n, q);
  for (Eigen::Index j = 0; j < q; ++j) basis.col(j) = from_real_coords(svd.matrixU().col(j), neg);

  const Eigen::MatrixXcd proj = basis.adjoint() * h * basis;
  Eigen::MatrixXd b = proj.real();
  b = 0.5 * (b + b.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(b);
  group = basis * small.eigenvectors().cast<Complex>();
  for (Eigen::Index j = 0; j < q; ++j) fix_sign(group.col(j));
  return small.eigenvalues();
}

// y = H (hi + lo) in double-double, skipping structural zeros of H.
std::vector<dd::Complex> apply_dd(const Hamiltonian& h, const Eigen::VectorXcd& hi, const Eigen::VectorXcd& lo) {
  const Eigen::MatrixXcd& H = h.matrix;
  const Eigen::Index n = H.rows();
  std::vector<dd::Complex> y(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (hi(j) == Complex{} && lo(j) == Complex{}) continue;
    const dd::Complex uj = dd::Complex::of(hi(j), lo(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (H(i, j) != Complex{}) y[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + uj * H(i, j);
    }
    if (h.diagonal_lo.size() == n && h.diagonal_lo(j) != 0.0) {
      y[static_cast<std::size_t>(j)] = y[static_cast<std::size_t>(j)] + uj * dd::Real{h.diagonal_lo(j), 0.0};
    }
  }
  return y;
}

// Rounded eigen-residual lambda u - H u of one column; returns its max modulus.
double eigen_residual(const Hamiltonian& h, const Eigen::VectorXcd& hi, const Eigen::VectorXcd& lo,
                      dd::Real lambda, Eigen::Ref<Eigen::VectorXcd> out) {
  const auto hu = apply_dd(h, hi, lo);
  double rmax = 0.0;
  for (Eigen::Index i = 0; i < h.matrix.rows(); ++i) {
    out(i) = (dd::Complex::of(hi(i), lo(i)) * lambda - hu[static_cast<std::size_t>(i)]).rounded();
    rmax = std::max(rmax, std::abs(out(i)));
  }
  return rmax;
}

// Newton refinement of the eigenpairs in columns [a, b) (one degeneracy group)
// to double-double accuracy. Corrections come from the bordered system
//   [H - c, -U; U^H, 0] [delta; m] = [lambda u - H u; 0]
// factored once in double precision; residuals are formed in double-double.
// Finally each column is normalized in double-double.
void refine_group(const Hamiltonian& h, Eigen::MatrixXcd& hi, Eigen::MatrixXcd& lo, std::vector<dd::Real>& lam,
                  Eigen::Index a, Eigen::Index b) {
  const Eigen::MatrixXcd& H = h.matrix;
  const Eigen::Index n = H.rows();
  const Eigen::Index q = b - a;
  double center = 0.0;
  for (Eigen::Index j = a; j < b; ++j) center += lam[static_cast<std::size_t>(j)].hi;
  center /= static_cast<double>(q);

  std::optional<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu;
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(n + q, q);
  double best = 0.0;
  for (Eigen::Index j = 0; j < q; ++j) {
    best = std::max(best, eigen_residual(h, hi.col(a + j), lo.col(a + j), lam[static_cast<std::size_t>(a + j)],
                                         rhs.col(j).head(n)));
  }
  for (int iter = 0; iter < 3 && best > 0.0; ++iter) {
    if (!lu) {
      Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n + q, n + q);
      B.topLeftCorner(n, n) = H;
      B.topLeftCorner(n, n).diagonal().array() -= center;
      B.topRightCorner(n, q) = -hi.middleCols(a, q);
      B.bottomLeftCorner(q, n) = hi.middleCols(a, q).adjoint();
      lu.emplace(B);
    }
    const Eigen::MatrixXcd sol = lu->solve(rhs);
    Eigen::MatrixXcd new_hi = hi.middleCols(a, q), new_lo = lo.middleCols(a, q);
    std::vector<dd::Real> new_lam(lam.begin() + a, lam.begin() + b);
    for (Eigen::Index j = 0; j < q; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const dd::Complex u = dd::Complex::of(new_hi(i, j), new_lo(i, j)) + dd::Complex::of(sol(i, j));
        new_hi(i, j) = u.hi();
        new_lo(i, j) = u.lo();
      }
      new_lam[static_cast<std::size_t>(j)] = new_lam[static_cast<std::size_t>(j)] + dd::Real{sol(n + j, j).real(), 0.0};
    }
    Eigen::MatrixXcd new_rhs = Eigen::MatrixXcd::Zero(n + q, q);
    double rmax = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      rmax = std::max(rmax, eigen_residual(h, new_hi.col(j), new_lo.col(j), new_lam[static_cast<std::size_t>(j)],
                                           new_rhs.col(j).head(n)));
    }
    if (!(rmax < best)) break;  // converged to the attainable floor
    best = rmax;
    hi.middleCols(a, q) = new_hi;
    lo.middleCols(a, q) = new_lo;
    std::copy(new_lam.begin(), new_lam.end(), lam.begin() + a);
    rhs = std::move(new_rhs);
  }

  for (Eigen::Index j = a; j < b; ++j) {
    dd::Real sq;
    for (Eigen::Index i = 0; i < n; ++i) sq = sq + dd::norm(dd::Complex::of(hi(i, j), lo(i, j)));
    const dd::Real len = dd::sqrt(sq);
    if (len.hi == 1.0 && len.lo == 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const dd::Complex u = dd::Complex::of(hi(i, j), lo(i, j)) / len;
      hi(i, j) = u.hi();
      lo(i, j) = u.lo();
    }
  }
}

}  // namespace

EigenCluster solve_eigen(const Hamiltonian& h, int k0, int n_eigs) {
  const auto n = static_cast<int>(h.basis.size());
  if (k0 < 0 || n_eigs < 1 || k0 + n_eigs > n) {
    throw std::out_of_range("solve_eigen: requested eigenvalues " + std::to_string(k0 + 1) + ".." +
                            std::to_string(k0 + n_eigs) + " of a " + std::to_string(n) + "-dimensional space");
  }
  const auto neg = negation_map(h.basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.matrix);
  if (es.info() != Eigen::Success) throw NumericalError("dense Hermitian eigensolver did not converge");
  Eigen::VectorXd evals = es.eigenvalues();
  Eigen::MatrixXcd evecs = es.eigenvectors();

  auto same_group = [&](int i) {
    const double scale = std::max({1.0, std::abs(evals(i)), std::abs(evals(i + 1))});
    return evals(i + 1) - evals(i) < kDegeneracyTol * scale;
  };
  const int first = k0;
  const int last = k0 + n_eigs;  // exclusive
  Eigen::MatrixXcd evecs_lo = Eigen::MatrixXcd::Zero(n, n);
  std::vector<dd::Real> lam(static_cast<std::size_t>(n));
  int a = first;
  while (a > 0 && same_group(a - 1)) --a;
  while (a < last) {
    int b = a + 1;
    while (b < n && same_group(b - 1)) ++b;
    Eigen::MatrixXcd group = evecs.middleCols(a, b - a);
    const Eigen::VectorXd ritz = realify_group(h.matrix, group, neg);
    evecs.middleCols(a, b - a) = group;
    // a singleton or bitwise-degenerate group keeps the solver's eigenvalues
    if (evals(b - 1) != evals(a)) evals.segment(a, b - a) = ritz;
    for (int i = a; i < b; ++i) lam[static_cast<std::size_t>(i)] = {evals(i), 0.0};
    refine_group(h, evecs, evecs_lo, lam, a, b);
    for (int i = a; i < b; ++i) evals(i) = lam[static_cast<std::size_t>(i)].hi;
    a = b;
  }

  EigenCluster out;
  out.basis = h.basis;
  out.k0 = k0;
  for (int l = first; l < last; ++l) {
    out.eigenvalues.push_back(evals(l));
    out.eigenvalue_lo.push_back(lam[static_cast<std::size_t>(l)].lo);
    std::vector<Complex> c(evecs.col(l).data(), evecs.col(l).data() + n);
    std::vector<Complex> c_lo(evecs_lo.col(l).data(), evecs_lo.col(l).data() + n);
    out.vectors.emplace_back(h.basis, std::move(c), std::move(c_lo), true);
  }
  out.lower_gap = k0 > 0 ? evals(k0) - evals(k0 - 1) : evals(k0);
  if (last < n) out.upper_gap = evals(last) - evals(last - 1);
  if (out.upper_gap < kClusterGapTol) {
    out.warnings.push_back("cluster upper gap " + std::to_string(out.upper_gap) + " below 1e-8");
  }
  if (k0 > 0 && out.lower_gap < kClusterGapTol) {
    out.warnings.push_back("cluster lower gap " + std::to_string(out.lower_gap) + " below 1e-8");
  }
  return out;
}

std::vector<SpectralField> solve_source(const IndexSet& s, const Potential& V, std::span<const SpectralField> f) {
  std::vector<SpectralField> out;
  if (s.empty()) {
    for (const auto& fi : f) out.emplace_back(s, std::vector<Complex>{}, fi.is_real());
    return out;
  }
  const Hamiltonian h = assemble(s, V);
  Eigen::LLT<Eigen::MatrixXcd> llt(h.matrix);
  if (llt.info() != Eigen::Success) throw NumericalError("Galerkin matrix is not positive definite");
  for (const auto& fi : f) {
    Eigen::VectorXcd rhs(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = fi.at(s[i]);
    Eigen::VectorXcd x = llt.solve(rhs);
    // iterative refinement with double-double residuals
    Eigen::VectorXcd x_lo = Eigen::VectorXcd::Zero(x.size());
    double best = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 3; ++iter) {
      const auto hx = apply_dd(h, x, x_lo);
      Eigen::VectorXcd r(x.size());
      double rmax = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        r(i) = (dd::Complex::of(rhs(i)) - hx[static_cast<std::size_t>(i)]).rounded();
        rmax = std::max(rmax, std::abs(r(i)));
      }
      if (rmax == 0.0 || !(rmax < best)) break;
      best = rmax;
      const Eigen::VectorXcd delta = llt.solve(r);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const dd::Complex u = dd::Complex::of(x(i), x_lo(i)) + dd::Complex::of(delta(i));
        x(i) = u.hi();
        x_lo(i) = u.lo();
      }
    }
    out.emplace_back(s, std::vector<Complex>(x.data(), x.data() + x.size()),
                     std::vector<Complex>(x_lo.data(), x_lo.data() + x_lo.size()), fi.is_real());
  }
  return out;
}

}  // namespace apw
