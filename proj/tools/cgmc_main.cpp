#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cgmc/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool accept_large = false;
  std::string window;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_window) {
  cmd->add_option("--config", args.config_path, "configuration file (sectioned key=value)");
  cmd->add_option("--override", args.overrides, "override section.key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "master seed for the chain and phi sampling");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_flag("--accept-large", args.accept_large,
                "lift the desk-scale enumeration capacity caps");
  if (with_window) {
    cmd->add_option("--window", args.window, "reconstruct only coarse cells A..B (inclusive)");
  }
}

cgmc::ExperimentConfig resolve_config(const CommonArgs& args) {
  cgmc::ExperimentConfig config;
  if (!args.config_path.empty()) {
    config = cgmc::load_config_file(args.config_path);
  }
  for (const auto& assignment : args.overrides) {
    cgmc::apply_override(config, assignment);
  }
  if (args.seed) {
    config.seed = *args.seed;
    config.phi_seed = *args.seed;
  }
  if (!args.out_dir.empty()) config.directory = args.out_dir;
  config.accept_large = args.accept_large;
  if (!args.window.empty()) {
    const auto sep = args.window.find("..");
    if (sep == std::string::npos) {
      throw cgmc::ConfigError("--window expects A..B");
    }
    const int a = std::stoi(args.window.substr(0, sep));
    const int b = std::stoi(args.window.substr(sep + 2));
    config.window = {a, b};
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cgmc: coarse-grained Monte Carlo for 1-D spin chains with short- and "
               "long-range interactions"};
  app.require_subcommand(1);

  CommonArgs args;
  int exit_code = 0;

  const auto attach = [&](const char* name, const char* description, bool with_window,
                          cgmc::ExitCode (*driver)(const cgmc::ExperimentConfig&, std::ostream&)) {
    auto* cmd = app.add_subcommand(name, description);
    add_common(cmd, args, with_window);
    cmd->callback([&, driver] {
      try {
        const auto config = resolve_config(args);
        exit_code = static_cast<int>(driver(config, std::cout));
      } catch (const cgmc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = static_cast<int>(cgmc::ExitCode::ConfigurationError);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = static_cast<int>(cgmc::ExitCode::Failure);
      }
    });
  };

  attach("precompute-phi", "build correlation tables and write them to disk", false,
         cgmc::run_precompute_phi);
  attach("simulate-micro", "run the microscopic single-spin-flip chain", false,
         cgmc::run_simulate_micro);
  attach("simulate-cg", "run the coarse block-update chain", false, cgmc::run_simulate_cg);
  attach("validate", "run the desk-scale invariant suite", false, cgmc::run_validate);
  attach("reconstruct", "sample coarse states and reconstruct microscopic ones", true,
         cgmc::run_reconstruct);

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
