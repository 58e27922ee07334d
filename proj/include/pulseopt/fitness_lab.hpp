#pragma once

#include <memory>
#include <optional>

#include "pulseopt/ga_engine.hpp"
#include "pulseopt/memory_sim.hpp"
#include "pulseopt/pulse_codec.hpp"

namespace pulseopt {

/// Internal memory efficiency: retrieved energy over input energy.
/// The output window is [storage - storage/2, storage + storage/2], the input
/// window [-storage/2, storage/2], both integrated by the trapezoid rule.
struct EfficiencyResult {
  double eta = 0.0;
  double retrieved_energy = 0.0;
  double input_energy = 0.0;
  double input_window_lo = 0.0, input_window_hi = 0.0;
  double output_window_lo = 0.0, output_window_hi = 0.0;
};

/// Throws std::invalid_argument when the trace does not cover both windows,
/// std::domain_error on zero input energy or an efficiency outside [0, 1].
EfficiencyResult internal_efficiency(const MemoryTrace& trace,
                                     const ExperimentTiming& timing);

/// Fast experiment-style fitness: retrieved-window integral normalized by the
/// input tap. With tap_fraction = 1 (the simulator default, where the tap is
/// the whole input envelope) this equals the internal efficiency.
double proxy_fitness(const MemoryTrace& trace, const ExperimentTiming& timing,
                     double tap_fraction = 1.0);

/// Hard limit on the decoded electrical pulse area: fraction (alpha) of the
/// reference area I(theta_hat) learned by an unconstrained run.
struct EnergyConstraint {
  double reference_area = 0.0;  // I(theta_hat)
  double fraction = 1.0;        // alpha in (0, 1]
  double limit() const { return fraction * reference_area; }
};

/// Renormalization divisor for a genome under the constraint: 1 when the
/// decoded area is within budget, otherwise the factor the amplitude genes
/// must be divided by so the decoded area equals the budget (within 1e-9).
double resolve_renormalization(const Genome& g, const EnergyConstraint& constraint,
                               const PulseDecoder& decoder);

/// Evaluates a genome under the energy constraint: the scaled genome is
/// evaluated, the original is left untouched.
Evaluation energy_constrained_fitness(const Genome& g, const EnergyConstraint& constraint,
                                      const PulseDecoder& decoder,
                                      FitnessBackend& inner);

/// Fitness backend running the Lambda-system storage simulator.
class SimulatorBackend : public FitnessBackend {
 public:
  SimulatorBackend(PulseDecoder decoder, SignalSpec signal, ExperimentTiming timing,
                   SimParams params, InstrumentModel instrument, int threads = 0,
                   double tap_fraction = 1.0);

  std::vector<Evaluation> evaluate(std::span<const Genome> genomes) override;

  /// Single evaluation that keeps the simulated trace (plot/export path).
  SimOutcome evaluate_detail(const Genome& g) const;

  const PulseDecoder& decoder() const { return decoder_; }

 private:
  PulseDecoder decoder_;
  SignalSpec signal_;
  ExperimentTiming timing_;
  SimParams params_;
  InstrumentModel instrument_;
  int threads_;
  double tap_fraction_;
};

/// Analytic stand-in for the experiment: a separable quadratic bump peaking
/// at the center of each gene's domain, rescaled to [0, 1].
class ToyBackend : public FitnessBackend {
 public:
  explicit ToyBackend(const GeneSpace& space);
  std::vector<Evaluation> evaluate(std::span<const Genome> genomes) override;
  double fitness(const Genome& g) const;

 private:
  Eigen::ArrayXd center_, half_range_;
};

/// Applies the energy constraint in front of any backend. The wrapped backend
/// sees the renormalized genomes; reported betas travel with the results.
class EnergyConstrainedBackend : public FitnessBackend {
 public:
  EnergyConstrainedBackend(PulseDecoder decoder, EnergyConstraint constraint,
                           FitnessBackend& inner);
  std::vector<Evaluation> evaluate(std::span<const Genome> genomes) override;

  const EnergyConstraint& constraint() const { return constraint_; }

 private:
  PulseDecoder decoder_;
  EnergyConstraint constraint_;
  FitnessBackend& inner_;
};

}  // namespace pulseopt
