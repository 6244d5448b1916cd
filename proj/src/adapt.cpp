#include "apw/adapt.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace apw {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::EigenFeasible: return "eigen-feasible";
    case Mode::EigenExact: return "eigen-exact";
    case Mode::Source: return "source";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  if (s == "eigen-feasible") return Mode::EigenFeasible;
  if (s == "eigen-exact") return Mode::EigenExact;
  if (s == "source") return Mode::Source;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Tol: return "tol";
    case Termination::MaxIter: return "max_iter";
    case Termination::MaxDof: return "max_dof";
    case Termination::Exact: return "exact";
  }
  return "unknown";
}

void validate(const AdaptiveConfig& c) {
  if (c.dim < 1 || c.dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (!(c.theta_tilde > 0.0 && c.theta_tilde < 1.0)) throw std::invalid_argument("theta_tilde must lie in (0, 1)");
  if (!(c.zeta >= 0.0)) throw std::invalid_argument("zeta must be nonnegative");
  if (!(c.zeta < c.theta_tilde)) throw std::invalid_argument("zeta must be smaller than theta_tilde");
  if (!(c.tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  if (c.M0 < 1) throw std::invalid_argument("M0 must be at least 1");
  if (c.k0 < 0) throw std::invalid_argument("k0 must be nonnegative");
  if (c.n_eigs < 1) throw std::invalid_argument("n_eigs must be at least 1");
  if (c.max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");
  if (c.max_dof < 1) throw std::invalid_argument("max_dof must be positive");
}

Admissibility check_admissibility(const AdaptiveConfig& c, const Potential& V) {
  Admissibility a;
  a.theta_bound = std::sqrt(V.alpha_lower() / (3.0 * V.alpha_upper()));
  a.zeta_bound = (a.theta_bound - c.theta_tilde) / (1.0 + a.theta_bound);
  a.theta_ok = c.theta_tilde < a.theta_bound;
  a.zeta_ok = c.zeta < a.zeta_bound;
  return a;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string prefixed(int n, const std::string& msg) { return "iteration " + std::to_string(n) + ": " + msg; }

}  // namespace

EigenRun run_eigen(const AdaptiveConfig& config, const Potential& V, const EigenObserver& observer) {
  validate(config);
  if (config.mode == Mode::Source) throw std::invalid_argument("run_eigen: source mode requested");
  if (config.dim != V.dim()) throw std::invalid_argument("run_eigen: potential dimension differs from config dim");
  const bool exact_mode = config.mode == Mode::EigenExact;
  const double zeta = exact_mode ? 0.0 : config.zeta;

  EigenRun run;
  run.admissibility = check_admissibility(config, V);
  if (!run.admissibility.theta_ok) {
    run.warnings.push_back("theta_tilde " + std::to_string(config.theta_tilde) +
                           " outside the proven complexity range (< " + std::to_string(run.admissibility.theta_bound) +
                           ")");
  } else if (!exact_mode && !run.admissibility.zeta_ok) {
    run.warnings.push_back("zeta " + std::to_string(config.zeta) + " outside the proven complexity range (< " +
                           std::to_string(run.admissibility.zeta_bound) + ")");
  }

  IndexSet current = ball(config.M0, config.dim);
  const std::size_t initial_size = current.size();
  int trunc_M = 1;
  for (int n = 0;; ++n) {
    const auto t0 = Clock::now();
    EigenCluster cluster = solve_eigen(assemble(current, V), config.k0, config.n_eigs);
    for (const auto& w : cluster.warnings) run.warnings.push_back(prefixed(n, w));

    std::vector<Residual> exact;
    for (std::size_t l = 0; l < cluster.size(); ++l) {
      exact.push_back(residual(cluster.vectors[l], cluster.eigenvalues[l], V, cluster.eigenvalue_lo[l]));
    }

    IterationRecord rec;
    rec.n = n;
    rec.index_set_size = current.size();
    rec.dof_delta = current.size() - initial_size;
    rec.values = cluster.eigenvalues;
    rec.eta_exact = eta_cluster(exact);
    rec.upper_gap = cluster.upper_gap;
    rec.lower_gap = cluster.lower_gap;
    for (const auto& r : exact) rec.galerkin_defect = std::max(rec.galerkin_defect, galerkin_defect(r, current));

    std::vector<Residual> used;
    if (exact_mode) {
      used = std::move(exact);
      rec.eta_tilde = rec.eta_exact;
      rec.truncation_M = V.support_radius();
    } else {
      TruncationChoice choice = choose_truncation(cluster.vectors, cluster.eigenvalues, V, zeta, trunc_M, cluster.eigenvalue_lo);
      trunc_M = choice.M;
      rec.eta_tilde = choice.eta_tilde;
      rec.zeta_actual = choice.zeta_actual;
      rec.truncation_M = choice.M;
      used = std::move(choice.residuals);
    }

    bool stop = true;
    if (rec.eta_tilde == 0.0) {
      run.reason = Termination::Exact;
    } else if (rec.eta_tilde < config.tol / (1.0 + zeta)) {
      run.reason = Termination::Tol;
    } else if (n >= config.max_iter) {
      run.reason = Termination::MaxIter;
    } else {
      const EstimatorValue est = estimator_breakdown(used, current);
      MarkResult mark = dorfler_mark(est.per_pair, config.theta_tilde, rec.eta_tilde * rec.eta_tilde, config.dim);
      IndexSet next = set_union(current, mark.marked);
      if (next.size() > config.max_dof) {
        run.reason = Termination::MaxDof;
      } else {
        rec.marked_pairs = mark.pairs_marked;
        run.marks.push_back({n, mark.marked, mark.achieved_fraction, est.per_pair});
        current = std::move(next);
        stop = false;
      }
    }
    rec.wall_time = seconds_since(t0);
    if (observer) observer(rec, cluster);
    run.records.push_back(std::move(rec));
    run.index_sets.push_back(cluster.basis);
    if (stop) {
      run.final_cluster = std::move(cluster);
      return run;
    }
  }
}

SourceRun run_source(const AdaptiveConfig& config, const Potential& V, std::span<const SpectralField> F,
                     const SourceObserver& observer) {
  validate(config);
  if (config.dim != V.dim()) throw std::invalid_argument("run_source: potential dimension differs from config dim");
  if (F.empty()) throw std::invalid_argument("run_source: no right-hand sides");

  SourceRun run;
  IndexSet current(config.dim);
  for (const auto& f : F) run.solutions.emplace_back(current, std::vector<Complex>{}, f.is_real());

  for (int n = 0;; ++n) {
    const auto t0 = Clock::now();
    const IndexSet here = current;
    if (!here.empty()) run.solutions = solve_source(here, V, F);
    std::vector<Residual> rs;
    for (std::size_t i = 0; i < F.size(); ++i) rs.push_back(source_residual(run.solutions[i], F[i], V));

    IterationRecord rec;
    rec.n = n;
    rec.index_set_size = here.size();
    rec.dof_delta = here.size();
    for (const auto& u : run.solutions) rec.values.push_back(hs_norm(u, 0.0));
    rec.eta_exact = eta_cluster(rs);
    rec.eta_tilde = rec.eta_exact;
    for (const auto& r : rs) rec.galerkin_defect = std::max(rec.galerkin_defect, galerkin_defect(r, here));

    bool stop = true;
    if (rec.eta_tilde == 0.0) {
      run.reason = Termination::Exact;
    } else if (rec.eta_tilde < config.tol) {
      run.reason = Termination::Tol;
    } else if (n >= config.max_iter) {
      run.reason = Termination::MaxIter;
    } else {
      const EstimatorValue est = estimator_breakdown(rs, here);
      MarkResult mark = dorfler_mark(est.per_pair, config.theta_tilde, rec.eta_tilde * rec.eta_tilde, config.dim);
      IndexSet next = set_union(here, mark.marked);
      if (next.size() > config.max_dof) {
        run.reason = Termination::MaxDof;
      } else {
        rec.marked_pairs = mark.pairs_marked;
        run.marks.push_back({n, mark.marked, mark.achieved_fraction, est.per_pair});
        current = std::move(next);
        stop = false;
      }
    }
    run.index_sets.push_back(here);
    rec.wall_time = seconds_since(t0);
    if (observer) observer(rec, run.solutions);
    run.records.push_back(std::move(rec));
    if (stop) return run;
  }
}

}  // namespace apw
