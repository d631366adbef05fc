#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgmc/cg.hpp"
#include "cgmc/diagnostics.hpp"
#include "cgmc/reconstruct.hpp"
#include "cgmc/sampler.hpp"

namespace cgmc {

/// Process exit codes shared by the CLI and the drivers.
enum class ExitCode : int {
  Ok = 0,
  Failure = 1,
  ConfigurationError = 2,
  CapacityExceeded = 3,
  CoverageError = 4,
  ValidationFailed = 5,
};

/// Flat sectioned key-value configuration of one experiment.
struct ExperimentConfig {
  // [model]
  double coupling = 0.0;
  double beta = 1.0;
  std::string kernel = "none";  // none | constant | triangular | smooth
  int range = 0;                // L, required when kernel != none
  // [geometry]
  int n_sites = 0;
  int cell_size = 1;
  // [chain]
  std::uint64_t steps = 10000;
  std::uint64_t burn_in = 1000;
  std::uint64_t thin = 1;
  std::uint64_t seed = 1;
  std::string observables = "magnetization,energy";
  // [phi]
  std::string phi_mode = "exact";  // exact | mc
  std::uint64_t phi_steps = 200000;
  std::uint64_t phi_burn_in = 10000;
  std::uint64_t phi_seed = 1;
  std::string phi_table;  // optional table path (read if present, written by precompute-phi)
  // [reconstruct]
  std::uint64_t draws = 1000;
  std::string exactness = "auto";  // auto | exact | mc
  // [output]
  std::string directory = "out";
  std::string formats = "csv,json";

  bool accept_large = false;
  std::optional<std::pair<int, int>> window;  // reconstruct --window A..B (cells A..B inclusive)

  ModelSpec model() const;
  LatticeGeometry geometry() const;
  ChainConfig chain() const;
  CapacityPolicy caps() const;
  ReconstructionPlan reconstruction_plan() const;

  /// Resolved key/value view, used for artifact echoes.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Parses the sectioned key-value text format. Unknown keys are errors with
/// line diagnostics.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Applies "section.key=value" overrides on top of a parsed config.
void apply_override(ExperimentConfig& config, const std::string& assignment);

struct ValidationCheck {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass = true;
};

/// Replaceable evaluators, used by tests to inject faults.
struct ValidationHooks {
  std::function<double(const CoarseConfiguration&, const CoarseLongRangeKernel&,
                       const LatticeGeometry&)>
      h_cg_long_fn;
};

/// Runs the desk-scale oracle-backed invariant suite.
ValidationReport run_validation_suite(const ValidationHooks& hooks = {});

std::string validation_report_json(const ValidationReport& report);

/// Subcommand drivers. Each writes its artifacts under config.directory and
/// returns the process exit code. Human-readable progress goes to `out`.
ExitCode run_precompute_phi(const ExperimentConfig& config, std::ostream& out);
ExitCode run_simulate_micro(const ExperimentConfig& config, std::ostream& out);
ExitCode run_simulate_cg(const ExperimentConfig& config, std::ostream& out);
ExitCode run_validate(const ExperimentConfig& config, std::ostream& out);
ExitCode run_reconstruct(const ExperimentConfig& config, std::ostream& out);

}  // namespace cgmc
