#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pulseopt/analysis.hpp"
#include "pulseopt/run_config.hpp"

namespace pulseopt {

/// Files produced by one optimization run. The config snapshot alone suffices
/// to reproduce the run bit-for-bit.
struct RunArtifacts {
  std::filesystem::path dir;
  std::filesystem::path config_path;
  std::filesystem::path runlog_path;
  std::filesystem::path generations_path;
  std::filesystem::path best_path;
  std::filesystem::path trace_path;  // empty for the toy backend
};

struct OptimizeOutcome {
  RunArtifacts artifacts;
  Individual best;
  double best_beta = 1.0;
  double best_area = 0.0;  // area of the evaluated (renormalized) waveform
};

/// Per-run seed for sweep entries: the root seed mixed with a stable tag such
/// as "width=18:gaussian" so entries are independent yet reproducible.
uint64_t sweep_entry_seed(uint64_t root_seed, const std::string& tag);

/// Runs the configured optimization and persists config snapshot, run log,
/// generation records, best genome and (sim backend) the best trace.
OptimizeOutcome cmd_optimize(const RunConfig& config);

struct WidthSweepRow {
  double fwhm = 0.0;
  double eta_gaussian = 0.0;
  double eta_freeform = 0.0;
};

struct WidthSweepOutcome {
  std::filesystem::path summary_path;
  std::vector<WidthSweepRow> rows;
  std::vector<std::string> errors;  // per-entry failures; sweep continues
};

/// Optimizes both encodings for every width in signal.fwhm_list_ns and
/// writes the (fwhm, eta_gaussian, eta_freeform) summary feeding the
/// bandwidth fit. Duplicate widths are dropped with a warning.
WidthSweepOutcome cmd_sweep_width(const RunConfig& config);

struct EnergySweepRow {
  double alpha = 0.0;
  double eta = 0.0;
  double area_over_reference = 0.0;  // achieved area / I(theta_hat)
};

struct EnergySweepOutcome {
  std::filesystem::path summary_path;
  double reference_area = 0.0;
  std::vector<EnergySweepRow> rows;
  std::vector<std::string> errors;
};

/// Constrained optimizations over energy.alpha_list. The reference directory
/// must hold the artifacts of a prior cmd_optimize with the same encoding;
/// its best genome defines the pulse-area budget.
EnergySweepOutcome cmd_sweep_energy(const RunConfig& config,
                                    const std::filesystem::path& reference_dir);

/// Derives convergence.csv, violin.csv and variance.csv from a run directory.
void cmd_analyze(const std::filesystem::path& run_dir, int bins = 40,
                 LogWeighting weighting = LogWeighting::UniqueGenomes);

struct EmitReport {
  std::vector<std::string> written;
  std::vector<std::string> errors;
};

/// Emits every plot CSV the directory's artifacts support: analysis bundle,
/// best-pulse trace and, for width-sweep roots, the bandwidth fit.
EmitReport cmd_emit_plots(const std::filesystem::path& run_dir);

}  // namespace pulseopt
