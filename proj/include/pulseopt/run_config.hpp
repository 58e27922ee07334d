#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulseopt/fitness_lab.hpp"
#include "pulseopt/ga_engine.hpp"
#include "pulseopt/memory_sim.hpp"
#include "pulseopt/pulse_codec.hpp"

namespace pulseopt {

enum class BackendKind { Sim, Toy };

std::string to_string(BackendKind k);
BackendKind backend_from_string(const std::string& s);

/// Everything one optimization or sweep needs, loadable from a JSON file.
/// Unknown keys are rejected so typos surface instead of silently falling
/// back to defaults.
struct RunConfig {
  Encoding encoding = Encoding::Freeform;
  uint64_t seed = 1;
  BackendKind backend = BackendKind::Sim;
  int threads = 0;  // 0 = hardware concurrency
  std::string output_dir = "runs/out";

  GAConfig ga = GAConfig::freeform_defaults();
  bool ga_generations_explicit = false;  // user pinned ga.generations in the file

  TimeWindow window;            // decode window (ns)
  double sample_period = 1.0;   // decode sample period (ns)
  double spline_lambda = 0.0;   // free-form smoothing parameter

  SignalSpec signal;
  std::vector<double> signal_fwhm_sweep;  // sweep-width widths (ns)

  ExperimentTiming timing;
  SimParams sim;
  InstrumentModel instrument;

  std::vector<double> energy_fractions;  // sweep-energy alphas
  double tap_fraction = 1.0;

  /// GAConfig with the gene count and generation count implied by the
  /// encoding (16 genes/50 generations free-form, 3 genes/25 generations
  /// Gaussian) unless the file pinned them.
  GAConfig effective_ga() const;

  PulseDecoder decoder() const { return {encoding, window, sample_period, spline_lambda}; }

  void validate() const;  // throws ConfigError naming the offending field

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace pulseopt
