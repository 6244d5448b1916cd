#include "apw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "apw/errors.hpp"

namespace apw {

namespace {

Eigen::MatrixXcd columns(std::span<const SpectralField> fields, const IndexSet& basis) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis.size()),
                                              static_cast<Eigen::Index>(fields.size()));
  for (std::size_t j = 0; j < fields.size(); ++j) {
    const SpectralField e = embed(fields[j], basis);
    for (std::size_t i = 0; i < basis.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e.coeffs()[i];
  }
  return m;
}

bool covers(const IndexSet& outer, const IndexSet& inner) {
  return std::all_of(inner.begin(), inner.end(), [&](const FreqIndex& g) { return outer.contains(g); });
}

// X L^{-H} with L L^H = X^H A X.
Eigen::MatrixXcd a_orthonormalize(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& A) {
  Eigen::MatrixXcd gram = X.adjoint() * A * X;
  gram = 0.5 * (gram + gram.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw NumericalError("subspace basis is numerically rank deficient");
  Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  return llt.matrixL().solve(X.adjoint()).adjoint();
}

// Largest a-norm of (I - P_Y) Qx over unit coefficient vectors.
double directed(const Eigen::MatrixXcd& Qx, const Eigen::MatrixXcd& Qy, const Eigen::MatrixXcd& A,
                const Eigen::LLT<Eigen::MatrixXcd>& chol) {
  const Eigen::MatrixXcd R = Qx - Qy * (Qy.adjoint() * A * Qx);
  const Eigen::MatrixXcd B = chol.matrixU() * R;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
  return std::min(1.0, svd.singularValues()(0));
}

double gap(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& Y, const Eigen::MatrixXcd& A) {
  if (X.cols() == 0 || Y.cols() == 0) throw std::invalid_argument("subspace_distance: empty basis");
  Eigen::LLT<Eigen::MatrixXcd> chol(A);
  if (chol.info() != Eigen::Success) throw NumericalError("energy matrix is not positive definite");
  const Eigen::MatrixXcd Qx = a_orthonormalize(X, A);
  const Eigen::MatrixXcd Qy = a_orthonormalize(Y, A);
  return std::max(directed(Qx, Qy, A, chol), directed(Qy, Qx, A, chol));
}

IndexSet common_basis(std::span<const SpectralField> X, std::span<const SpectralField> Y, int dim) {
  IndexSet s(dim);
  for (const auto& f : X) s = set_union(s, f.support());
  for (const auto& f : Y) s = set_union(s, f.support());
  return s;
}

}  // namespace

ReferenceSolution reference_solve(const Potential& V, int k0, int n_eigs, int M_ref) {
  if (M_ref < 0) throw std::invalid_argument("reference_solve: M_ref must be nonnegative");
  ReferenceSolution ref;
  ref.M_ref = M_ref;
  ref.basis = ball(M_ref, V.dim());
  Hamiltonian h = assemble(ref.basis, V);
  ref.cluster = solve_eigen(h, k0, n_eigs);
  ref.matrix = std::move(h.matrix);
  ref.eigenvalue_tail_gap = ref.cluster.upper_gap;
  ref.lower_gap = ref.cluster.lower_gap;
  ref.warnings = ref.cluster.warnings;
  if (!eigenvalue_gap_check(ref).ok) {
    ref.warnings.push_back("reference cluster is not separated from the rest of the spectrum at M_ref = " +
                           std::to_string(M_ref));
  }
  return ref;
}

SelfCheck reference_self_check(const ReferenceSolution& ref, const Potential& V) {
  const ReferenceSolution finer = reference_solve(V, ref.cluster.k0, static_cast<int>(ref.cluster.size()), 2 * ref.M_ref);
  SelfCheck out;
  out.M_ref = finer.M_ref;
  for (std::size_t l = 0; l < ref.cluster.size(); ++l) {
    out.max_eigenvalue_change =
        std::max(out.max_eigenvalue_change, std::abs(ref.cluster.eigenvalues[l] - finer.cluster.eigenvalues[l]));
  }
  out.subspace_change = cluster_distance(finer, ref.cluster, V).total;
  return out;
}

double subspace_distance(std::span<const SpectralField> X, std::span<const SpectralField> Y, const Potential& V) {
  if (X.empty() || Y.empty()) throw std::invalid_argument("subspace_distance: empty basis");
  const IndexSet s = common_basis(X, Y, V.dim());
  const Eigen::MatrixXcd A = assemble(s, V).matrix;
  return gap(columns(X, s), columns(Y, s), A);
}

std::vector<std::pair<std::size_t, std::size_t>> eigenvalue_groups(std::span<const double> eigenvalues, double rel_tol) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t a = 0;
  while (a < eigenvalues.size()) {
    std::size_t b = a + 1;
    while (b < eigenvalues.size() &&
           eigenvalues[b] - eigenvalues[b - 1] < rel_tol * std::max({1.0, std::abs(eigenvalues[b]), std::abs(eigenvalues[b - 1])}))
      ++b;
    groups.emplace_back(a, b);
    a = b;
  }
  return groups;
}

ClusterDistance cluster_distance(const ReferenceSolution& ref, const EigenCluster& cluster, const Potential& V) {
  if (cluster.size() != ref.cluster.size()) throw std::invalid_argument("cluster_distance: cluster sizes differ");
  IndexSet s = ref.basis;
  Eigen::MatrixXcd A;
  if (covers(ref.basis, cluster.basis)) {
    A = ref.matrix;
  } else {
    s = set_union(ref.basis, cluster.basis);
    A = assemble(s, V).matrix;
  }
  const Eigen::MatrixXcd X = columns(cluster.vectors, s);
  const Eigen::MatrixXcd Y = columns(ref.cluster.vectors, s);
  ClusterDistance out;
  double sum = 0.0;
  for (const auto& [a, b] : eigenvalue_groups(ref.cluster.eigenvalues)) {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto len = static_cast<Eigen::Index>(b - a);
    const double d = gap(X.middleCols(ia, len), Y.middleCols(ia, len), A);
    out.per_group.push_back(d);
    sum += d * d;
  }
  out.total = std::sqrt(sum);
  return out;
}

std::vector<double> eigenvalue_errors(const ReferenceSolution& ref, const EigenCluster& cluster, const Potential&) {
  if (cluster.size() != ref.cluster.size()) throw std::invalid_argument("eigenvalue_errors: cluster sizes differ");
  if (!covers(ref.basis, cluster.basis)) {
    throw std::invalid_argument("eigenvalue_errors: cluster basis reaches beyond the reference ball");
  }
  const Eigen::MatrixXcd X = columns(cluster.vectors, ref.basis);
  const Eigen::MatrixXcd Y = columns(ref.cluster.vectors, ref.basis);
  std::vector<double> out(cluster.size());
  for (const auto& [a, b] : eigenvalue_groups(ref.cluster.eigenvalues)) {
    for (std::size_t l = a; l < b; ++l) {
      const double lam = ref.cluster.eigenvalues[l];
      if (b - a > 1) {
        out[l] = cluster.eigenvalues[l] - lam;
        continue;
      }
      const auto il = static_cast<Eigen::Index>(l);
      const Complex c = Y.col(il).dot(X.col(il));
      const Complex phase = std::abs(c) > 0.0 ? c / std::abs(c) : Complex(1.0);
      const Eigen::VectorXcd e = X.col(il) - phase * Y.col(il);
      out[l] = e.dot(ref.matrix * e).real() - lam * e.squaredNorm();
    }
  }
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need two or more matching points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = x.size();
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
  return f;
}

RateFit fit_rates(std::span<const IterationRecord> records, std::span<const double> errors, int skip) {
  if (records.size() != errors.size()) throw std::invalid_argument("fit_rates: records and errors differ in length");
  if (records.size() < 4) throw std::invalid_argument("fit_rates: need at least 4 iterations");
  if (skip < 0) throw std::invalid_argument("fit_rates: skip must be nonnegative");
  RateFit out;
  std::vector<double> n, logd, loge_all, loge_d;
  for (std::size_t i = static_cast<std::size_t>(skip); i < records.size(); ++i) {
    if (!(errors[i] > 0.0)) {
      out.exact = true;
      return out;
    }
    n.push_back(records[i].n);
    loge_all.push_back(std::log(errors[i]));
    if (records[i].dof_delta > 0) {
      logd.push_back(std::log(static_cast<double>(records[i].dof_delta)));
      loge_d.push_back(std::log(errors[i]));
    }
  }
  if (n.size() < 2) throw std::invalid_argument("fit_rates: fewer than 2 records left after skipping");
  const LinearFit a = fit_line(n, loge_all);
  out.alpha_hat = std::exp(a.slope);
  out.r2_alpha = a.r2;
  out.contracting = out.alpha_hat < 1.0;
  if (logd.size() >= 2 && std::any_of(logd.begin(), logd.end(), [&](double v) { return v != logd.front(); })) {
    const LinearFit s = fit_line(logd, loge_d);
    out.s_hat = -s.slope;
    out.r2_s = s.r2;
    out.s_available = true;
  }
  return out;
}

GapCheck eigenvalue_gap_check(const ReferenceSolution& ref) {
  const auto& ev = ref.cluster.eigenvalues;
  GapCheck g;
  g.lower_gap = ref.lower_gap;
  g.upper_gap = ref.eigenvalue_tail_gap;
  const bool lower_ok = ref.cluster.k0 == 0 || g.lower_gap > 1e-8 * std::max(1.0, std::abs(ev.front()));
  const bool upper_ok = g.upper_gap > 1e-8 * std::max(1.0, std::abs(ev.back()));
  g.ok = lower_ok && upper_ok;
  return g;
}

std::vector<SpectralField> reference_source_solve(const Potential& V, std::span<const SpectralField> F, int M_ref) {
  return solve_source(ball(M_ref, V.dim()), V, F);
}

double energy_error(std::span<const SpectralField> reference, std::span<const SpectralField> approx,
                    const Potential& V) {
  if (reference.size() != approx.size()) throw std::invalid_argument("energy_error: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) sum += std::pow(energy_norm(combine(1.0, reference[i], -1.0, approx[i]), V), 2);
  return std::sqrt(sum);
}

}  // namespace apw
