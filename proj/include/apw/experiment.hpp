#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "apw/verify.hpp"

namespace apw {

/// Invalid configuration; `path()` names the offending field, e.g. "algorithm.zeta".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& msg) : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class RunMode { EigenFeasible, EigenExact, Source, Uniform, Compare };

std::string to_string(RunMode m);
/// Throws ConfigError("mode", ...) for unknown names.
RunMode parse_run_mode(const std::string& s);

struct PotentialSpec {
  enum class Family { Constant, Trig, Coefficients, RandomDecay };
  Family family = Family::Constant;
  double c = 1.0;                                        ///< constant and trig
  std::vector<std::pair<FreqIndex, double>> trig;        ///< a_k cos(k.x)
  std::vector<std::pair<FreqIndex, Complex>> coefficients;  ///< V_G in the e_G convention
  double amplitude = 1.0;  ///< random-decay: |V_G| = A (1 + |G|^2)^{-p/2}
  double p = 2.5;
  int r_cut = 8;
  std::optional<std::uint64_t> seed;
};

std::string to_string(PotentialSpec::Family f);

struct VerificationConfig {
  int M_ref = 0;  ///< 0: twice the largest radius the run reaches
  bool enable_subspace_distance = true;
  bool self_check = false;        ///< also solve at 2 M_ref and report the change
  std::vector<int> uniform_radii;  ///< empty: M0 .. (final radius + 2)
  int fit_skip = 1;
};

struct OutputConfig {
  std::string directory;  ///< empty: not set in the file
  bool gnuplot = false;
  bool marked_sets = true;
};

struct ExperimentConfig {
  PotentialSpec potential;
  std::vector<SpectralField> rhs;  ///< source mode right-hand sides
  AdaptiveConfig algorithm;        ///< carries dim, k0, n_eigs
  RunMode mode = RunMode::EigenFeasible;
  VerificationConfig verification;
  OutputConfig output;
  nlohmann::json echo;  ///< the configuration as read
};

/// Validates a parsed JSON document and fills defaults. Problem fields may sit
/// under "problem" or at the top level.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Reads and parses a file; malformed JSON is reported as a ConfigError.
ExperimentConfig ingest_config(const std::filesystem::path& path);

struct BuiltPotential {
  Potential V;
  double shift = 0.0;  ///< constant added to enforce min V >= 0.5 (random-decay)
  /// Estimated sup-norm of the coefficients dropped beyond r_cut (random-decay),
  /// infinity when the tail does not converge absolutely.
  double modeling_error = 0.0;
};

/// Throws ConfigError("problem.potential...") for potentials that fail verification.
BuiltPotential build_potential(const PotentialSpec& spec, int dim);

struct UniformRow {
  int M = 0;
  std::size_t dof = 0;
  double distance = 0.0;
  std::vector<double> eigenvalues;
  std::vector<double> eigenvalue_errors;
};

/// Dense solves on ball(M) for ascending radii, measured against the reference.
std::vector<UniformRow> uniform_sweep(const Potential& V, const ReferenceSolution& ref, const std::vector<int>& radii);

struct ComparisonRow {
  int n = 0;
  std::size_t adaptive_dof = 0;
  double adaptive_distance = 0.0;
  int uniform_M = -1;  ///< smallest swept radius at least as accurate; -1 if none
  std::size_t uniform_dof = 0;
  double dof_ratio = 0.0;  ///< adaptive_dof / uniform_dof, NaN if unmatched
};

struct RunOptions {
  std::optional<std::filesystem::path> directory;  ///< overrides every other source
  bool write_files = true;
  std::ostream* log = nullptr;  ///< per-iteration progress lines
};

struct ExperimentOutcome {
  ExperimentConfig config;
  std::optional<BuiltPotential> potential;
  std::optional<EigenRun> eigen;
  std::vector<EigenCluster> clusters;  ///< discrete cluster of every iteration
  std::optional<SourceRun> source;
  std::optional<ReferenceSolution> reference;
  std::vector<ClusterDistance> distances;
  std::vector<std::vector<double>> eigenvalue_errors;
  std::vector<double> energy_errors;
  std::optional<RateFit> fit;
  std::vector<UniformRow> uniform;
  std::vector<ComparisonRow> comparison;
  std::vector<std::string> warnings;
  nlohmann::json summary;
  std::filesystem::path directory;
};

/// Output directory precedence: explicit override, then $APW_OUTPUT_DIR, then
/// the config file, then "apw_out".
std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& override_dir,
                                         const OutputConfig& out);

/// Runs the configured mode and, unless disabled, writes iterations.csv,
/// summary.json, marked_sets.jsonl and (compare / uniform) uniform.csv and
/// comparison.csv. Every file is written to a temporary name and renamed.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// 17 significant digits; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);

}  // namespace apw
