// apw run <config> [--out DIR] [--seed N] [--mode MODE] [--quiet]
//
// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "apw/errors.hpp"
#include "apw/experiment.hpp"

namespace {

constexpr int kValidationError = 2;
constexpr int kNumericalError = 3;

int run(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
        const std::string& mode, bool quiet) {
  apw::ExperimentConfig cfg = apw::ingest_config(config_path);
  if (seed) cfg.potential.seed = seed;
  if (!mode.empty()) {
    cfg.mode = apw::parse_run_mode(mode);
    if (cfg.mode == apw::RunMode::Source && cfg.rhs.empty()) {
      throw apw::ConfigError("problem.rhs", "source mode needs at least one right-hand side");
    }
    cfg.algorithm.mode = cfg.mode == apw::RunMode::EigenExact ? apw::Mode::EigenExact
                         : cfg.mode == apw::RunMode::Source   ? apw::Mode::Source
                                                              : apw::Mode::EigenFeasible;
  }

  apw::RunOptions options;
  if (!out_dir.empty()) options.directory = out_dir;
  if (!quiet) options.log = &std::cerr;
  const apw::ExperimentOutcome o = apw::run_experiment(cfg, options);

  if (!quiet) {
    for (const auto& w : o.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "mode: " << apw::to_string(cfg.mode) << '\n'
              << "termination: " << o.summary.value("termination_reason", std::string("?")) << '\n';
    if (o.summary.contains("final_distance")) std::cout << "final distance: " << o.summary["final_distance"] << '\n';
    std::cout << "output: " << o.directory.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive planewave eigensolver for -Delta + V on the torus"};
  app.require_subcommand(1);

  auto* cmd = app.add_subcommand("run", "run one experiment from a JSON config");
  std::string config_path, out_dir, mode;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", out_dir, "output directory (overrides $APW_OUTPUT_DIR and the config)");
  cmd->add_option("--seed", seed, "seed for random-decay potentials");
  cmd->add_option("--mode", mode, "eigen-feasible|eigen-exact|source|uniform|compare")
      ->check(CLI::IsMember({"eigen-feasible", "eigen-exact", "source", "uniform", "compare"}));
  cmd->add_flag("--quiet", quiet, "suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }

  try {
    return run(config_path, out_dir, seed, mode, quiet);
  } catch (const apw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidationError;
  } catch (const apw::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kNumericalError;
  }
}
