#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pulseopt/pulse_codec.hpp"

namespace pulseopt {

/// Physical and numerical parameters of the Lambda-system ensemble.
/// Rates are in 1/ns; 500 MHz corresponds to 0.5.
struct SimParams {
  double optical_depth = 10.0;
  double gamma = 0.5;        // excited-state (polarization) decay rate
  double spin_decay = 6.559106611687286e-4;  // ground-state coherence decay
  double detuning = 1.0;     // one-photon red detuning (1 GHz)
  double omega_max = 1.0;    // peak control Rabi frequency at drive amplitude 1
  int n_z = 64;              // spatial grid points through the cell
  double dt = 0.05;          // integrator step (ns)

  void validate() const;  // throws ConfigError
};

/// Experiment schedule. The signal pulse is centered at t = 0; the read
/// control pulse arrives storage_time later. The simulated trace span is
/// derived from the schedule unless set explicitly.
struct ExperimentTiming {
  double storage_time = 200.0;  // ns between signal center and read pulse
  double read_fwhm = 40.0;      // ns, fixed Gaussian read pulse
  double trace_start = std::numeric_limits<double>::quiet_NaN();  // NaN = auto
  double trace_end = std::numeric_limits<double>::quiet_NaN();    // NaN = auto

  void validate() const;
};

/// Gaussian signal pulse to be stored; fwhm refers to the intensity profile.
struct SignalSpec {
  double fwhm = 18.0;      // ns
  double amplitude = 1.0;  // peak field amplitude (normalized)
};

/// AOM response: first-order low-pass on the electrical waveform (10-90%
/// rise time in ns; 0 disables filtering), followed by the square-root
/// power-to-Rabi mapping.
struct InstrumentModel {
  double rise_time = 15.0;

  /// Low-pass time constant; the 10-90% rise of a first-order filter spans
  /// tau * ln 9.
  double tau() const { return rise_time / 2.1972245773362196; }
};

/// Input/output field-intensity time series of one storage experiment.
struct MemoryTrace {
  double t_start = 0.0;
  double dt = 0.05;
  Eigen::ArrayXd input_intensity;   // reference |E_in|^2 (lossless)
  Eigen::ArrayXd output_intensity;  // |E_out|^2 at the cell exit
  double final_spin_norm = 0.0;     // integral of |S|^2 over z at trace end

  Eigen::Index size() const { return output_intensity.size(); }
  double time(Eigen::Index i) const { return t_start + dt * static_cast<double>(i); }
  double t_end() const { return time(size() - 1); }
};

/// Signal field envelope at time t (intensity FWHM = spec.fwhm, so the field
/// FWHM is sqrt(2) larger).
double signal_field(const SignalSpec& spec, double t);

/// Sampled signal field envelope on a uniform grid.
Eigen::ArrayXd make_signal(const SignalSpec& spec, double t0, double dt, Eigen::Index n);

/// Control Rabi-frequency envelope obtained from an electrical waveform.
struct RabiEnvelope {
  double t_start = 0.0;
  double dt = 1.0;
  Eigen::ArrayXd omega;
};

/// First-order low-pass (exact response to the piecewise-linear waveform)
/// followed by Omega = omega_max * sqrt(filtered amplitude).
RabiEnvelope apply_instrument(const Waveform& wf, const InstrumentModel& m,
                              double omega_max);

/// Integrates the slowly-varying-envelope Maxwell-Bloch equations of the
/// three-level Lambda system through write, dark-storage and read phases and
/// returns the intensity trace. Pure; throws BackendError when the step size
/// violates the stability bound or the integration diverges.
MemoryTrace simulate_experiment(const Waveform& write, const SignalSpec& signal,
                                const ExperimentTiming& timing, const SimParams& params,
                                const InstrumentModel& instrument);

/// One batch entry: trace plus the fitness assigned by the caller's
/// objective. Per-genome failures are captured in `error` and leave the
/// remaining batch untouched.
struct SimOutcome {
  double fitness = 0.0;
  MemoryTrace trace;
  std::string error;
  bool ok() const { return error.empty(); }
};

/// Decodes and simulates every genome (in parallel when threads != 1) and
/// scores each trace with the supplied objective. Results are returned in
/// input order regardless of execution order.
std::vector<SimOutcome> evaluate_batch(
    std::span<const Genome> genomes, const PulseDecoder& decoder,
    const SignalSpec& signal, const ExperimentTiming& timing, const SimParams& params,
    const InstrumentModel& instrument,
    const std::function<double(const MemoryTrace&)>& objective, int threads = 0);

}  // namespace pulseopt
