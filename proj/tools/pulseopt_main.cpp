#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pulseopt/errors.hpp"
#include "pulseopt/runner.hpp"

namespace {

using namespace pulseopt;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string backend;
  int64_t seed = -1;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "root RNG seed (overrides config)");
  cmd->add_option("--backend", flags.backend, "fitness backend: sim | toy")
      ->check(CLI::IsMember({"sim", "toy"}));
  cmd->add_option("--threads", flags.threads,
                  "evaluation threads (0 = all cores; overrides config)");
}

RunConfig load_with_overrides(const CommonFlags& flags) {
  RunConfig config = RunConfig::load(flags.config_path);
  if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
  if (flags.seed >= 0) config.seed = static_cast<uint64_t>(flags.seed);
  if (!flags.backend.empty()) config.backend = backend_from_string(flags.backend);
  if (flags.threads >= 0) config.threads = flags.threads;
  config.validate();
  return config;
}

int report_sweep_errors(const std::vector<std::string>& errors) {
  if (errors.empty()) return 0;
  for (const std::string& e : errors) std::cerr << "sweep entry failed: " << e << "\n";
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Genetic-algorithm optimization of quantum-memory write pulses"};
  app.require_subcommand(1);

  CommonFlags optimize_flags, width_flags, energy_flags;
  std::string reference_dir, analyze_dir, emit_dir, weighting = "unique";
  int bins = 40;

  CLI::App* optimize = app.add_subcommand("optimize", "run one pulse optimization");
  add_common(optimize, optimize_flags);

  CLI::App* sweep_width =
      app.add_subcommand("sweep-width", "optimize both encodings over signal widths");
  add_common(sweep_width, width_flags);

  CLI::App* sweep_energy = app.add_subcommand(
      "sweep-energy", "constrained optimizations over pulse-energy fractions");
  add_common(sweep_energy, energy_flags);
  sweep_energy
      ->add_option("--reference", reference_dir,
                   "directory of the unconstrained reference run")
      ->required();

  CLI::App* analyze = app.add_subcommand("analyze", "derive analysis CSVs from a run log");
  analyze->add_option("--run", analyze_dir, "run directory")->required();
  analyze->add_option("--bins", bins, "violin histogram bins");
  analyze->add_option("--weighting", weighting, "unique | all")
      ->check(CLI::IsMember({"unique", "all"}));

  CLI::App* emit = app.add_subcommand("emit-plots", "emit every supported plot CSV");
  emit->add_option("--run", emit_dir, "run or sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // command-line misuse counts as a config error
  }

  try {
    if (optimize->parsed()) {
      cmd_optimize(load_with_overrides(optimize_flags));
      return 0;
    }
    if (sweep_width->parsed()) {
      const auto sweep = cmd_sweep_width(load_with_overrides(width_flags));
      std::cout << "summary written to " << sweep.summary_path.string() << "\n";
      return report_sweep_errors(sweep.errors);
    }
    if (sweep_energy->parsed()) {
      const auto sweep =
          cmd_sweep_energy(load_with_overrides(energy_flags), reference_dir);
      std::cout << "summary written to " << sweep.summary_path.string() << "\n";
      return report_sweep_errors(sweep.errors);
    }
    if (analyze->parsed()) {
      cmd_analyze(analyze_dir, bins,
                  weighting == "all" ? LogWeighting::AllRecords
                                     : LogWeighting::UniqueGenomes);
      return 0;
    }
    if (emit->parsed()) {
      const EmitReport report = cmd_emit_plots(emit_dir);
      for (const std::string& w : report.written) std::cout << "wrote " << w << "\n";
      for (const std::string& e : report.errors) std::cerr << "error: " << e << "\n";
      return report.errors.empty() ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
