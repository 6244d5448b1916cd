#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "apw/marking.hpp"
#include "apw/operator.hpp"

namespace apw {

enum class Mode { EigenFeasible, EigenExact, Source };

std::string to_string(Mode m);
/// Accepts "eigen-feasible", "eigen-exact", "source".
Mode parse_mode(const std::string& s);

struct AdaptiveConfig {
  int dim = 1;
  double theta_tilde = 0.5;
  double zeta = 0.1;
  double tol = 1e-6;
  int M0 = 2;
  int k0 = 0;
  int n_eigs = 1;
  int max_iter = 50;  ///< number of refinements; records are n = 0..max_iter
  std::size_t max_dof = 20000;
  Mode mode = Mode::EigenFeasible;
};

/// Throws std::invalid_argument naming the offending field(s).
void validate(const AdaptiveConfig& c);

/// Parameter ranges under which the quasi-optimal complexity bound is proven.
struct Admissibility {
  double theta_bound = 0.0;  ///< sqrt(alpha_* / (3 alpha^*))
  double zeta_bound = 0.0;   ///< (theta_bound - theta) / (1 + theta_bound)
  bool theta_ok = false;
  bool zeta_ok = false;
};

Admissibility check_admissibility(const AdaptiveConfig& c, const Potential& V);

enum class Termination { Tol, MaxIter, MaxDof, Exact };

std::string to_string(Termination t);

struct IterationRecord {
  int n = 0;
  std::size_t index_set_size = 0;
  std::size_t dof_delta = 0;  ///< |G_n| - |G_0|
  std::vector<double> values;  ///< eigenvalues, or L2 norms of source solutions
  double eta_tilde = 0.0;      ///< estimator that drives marking and stopping
  double eta_exact = 0.0;
  double zeta_actual = 0.0;
  int truncation_M = 0;
  std::size_t marked_pairs = 0;
  double galerkin_defect = 0.0;  ///< max over members of galerkin_defect(r, G_n)
  double upper_gap = 0.0;        ///< cluster edge gap (eigen modes)
  double lower_gap = 0.0;
  double wall_time = 0.0;  ///< seconds spent in this iteration
};

/// Marking audit entry for one refinement step.
struct MarkAudit {
  int n = 0;
  IndexSet marked;
  double achieved_fraction = 0.0;
  std::vector<PairContribution> contributions;
};

struct EigenRun {
  std::vector<IterationRecord> records;
  std::vector<IndexSet> index_sets;  ///< G_0, G_1, ... one per record
  std::vector<MarkAudit> marks;
  EigenCluster final_cluster;
  Termination reason = Termination::MaxIter;
  Admissibility admissibility;
  std::vector<std::string> warnings;
};

using EigenObserver = std::function<void(const IterationRecord&, const EigenCluster&)>;

/// Adaptive loop for a cluster of eigenvalues. In EigenFeasible mode the
/// estimator is the certified truncated one and the loop stops once
/// eta_tilde < tol / (1 + zeta); EigenExact uses the exact residual and
/// eta < tol. Stops with Exact when the estimator vanishes.
EigenRun run_eigen(const AdaptiveConfig& config, const Potential& V, const EigenObserver& observer = {});

struct SourceRun {
  std::vector<IterationRecord> records;
  std::vector<IndexSet> index_sets;
  std::vector<MarkAudit> marks;
  std::vector<SpectralField> solutions;
  Termination reason = Termination::MaxIter;
  std::vector<std::string> warnings;
};

using SourceObserver = std::function<void(const IterationRecord&, std::span<const SpectralField>)>;

/// Adaptive loop for L u_i = f_i starting from the empty set, with the exact
/// estimator and the plain stopping test eta < tol.
SourceRun run_source(const AdaptiveConfig& config, const Potential& V, std::span<const SpectralField> F,
                     const SourceObserver& observer = {});

}  // namespace apw
