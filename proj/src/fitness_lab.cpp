#include "pulseopt/fitness_lab.hpp"

#include <cmath>
#include <stdexcept>

#include "pulseopt/errors.hpp"
#include "pulseopt/numeric.hpp"

namespace pulseopt {

EfficiencyResult internal_efficiency(const MemoryTrace& trace,
                                     const ExperimentTiming& timing) {
  timing.validate();
  const double half = timing.storage_time / 2.0;
  EfficiencyResult r;
  r.input_window_lo = -half;
  r.input_window_hi = half;
  r.output_window_lo = timing.storage_time - half;
  r.output_window_hi = timing.storage_time + half;

  const double eps = 1e-9;
  if (trace.t_start > r.input_window_lo + eps || trace.t_end() < r.output_window_hi - eps)
    throw std::invalid_argument("trace does not cover the efficiency windows");

  r.input_energy = trapezoid_window(trace.input_intensity, trace.t_start, trace.dt,
                                    r.input_window_lo, r.input_window_hi);
  r.retrieved_energy = trapezoid_window(trace.output_intensity, trace.t_start, trace.dt,
                                        r.output_window_lo, r.output_window_hi);
  if (r.input_energy <= 0.0)
    throw std::domain_error("undefined efficiency: input window energy is zero");

  r.eta = r.retrieved_energy / r.input_energy;
  if (r.eta < 0.0 || r.eta > 1.0)
    throw std::domain_error("efficiency " + std::to_string(r.eta) +
                            " outside [0, 1]; the trace violates passivity");
  return r;
}

double proxy_fitness(const MemoryTrace& trace, const ExperimentTiming& timing,
                     double tap_fraction) {
  if (!(tap_fraction > 0.0))
    throw std::invalid_argument("tap_fraction must be > 0");
  const double half = timing.storage_time / 2.0;
  const double tap = tap_fraction *
                     trapezoid_window(trace.input_intensity, trace.t_start, trace.dt,
                                      -half, half);
  if (tap <= 0.0) throw std::domain_error("undefined fitness: input tap energy is zero");
  const double retrieved =
      trapezoid_window(trace.output_intensity, trace.t_start, trace.dt,
                       timing.storage_time - half, timing.storage_time + half);
  return retrieved / tap;
}

double resolve_renormalization(const Genome& g, const EnergyConstraint& constraint,
                               const PulseDecoder& decoder) {
  if (!(constraint.reference_area > 0.0))
    throw ConfigError("energy constraint needs a positive reference area");
  if (!(constraint.fraction > 0.0) || constraint.fraction > 1.0)
    throw ConfigError("energy fraction (alpha) must be in (0, 1]");

  const double limit = constraint.limit();
  const double area = waveform_area(decoder.decode(g));
  if (area <= limit * (1.0 + 1e-12)) return 1.0;

  // closed form beta = I(theta) / (alpha I(theta_hat)); exact unless the
  // spline was clipped at the upper bound, in which case a couple of
  // fixed-point refinements land the area on the budget
  double beta = area / limit;
  for (int iter = 0; iter < 50; ++iter) {
    const double scaled_area =
        waveform_area(decoder.decode(decoder.scale_amplitudes(g, 1.0 / beta)));
    if (std::abs(scaled_area - limit) <= 1e-9 * limit) break;
    beta *= scaled_area / limit;
  }
  return beta;
}

Evaluation energy_constrained_fitness(const Genome& g, const EnergyConstraint& constraint,
                                      const PulseDecoder& decoder, FitnessBackend& inner) {
  const double beta = resolve_renormalization(g, constraint, decoder);
  const Genome scaled =
      beta == 1.0 ? g : decoder.scale_amplitudes(g, 1.0 / beta);
  const std::vector<Evaluation> ev = inner.evaluate(std::span<const Genome>(&scaled, 1));
  return {ev.at(0).fitness, beta};
}

SimulatorBackend::SimulatorBackend(PulseDecoder decoder, SignalSpec signal,
                                   ExperimentTiming timing, SimParams params,
                                   InstrumentModel instrument, int threads,
                                   double tap_fraction)
    : decoder_(decoder),
      signal_(signal),
      timing_(timing),
      params_(params),
      instrument_(instrument),
      threads_(threads),
      tap_fraction_(tap_fraction) {
  params_.validate();
  timing_.validate();
}

std::vector<Evaluation> SimulatorBackend::evaluate(std::span<const Genome> genomes) {
  const auto outcomes = evaluate_batch(
      genomes, decoder_, signal_, timing_, params_, instrument_,
      [this](const MemoryTrace& t) { return proxy_fitness(t, timing_, tap_fraction_); },
      threads_);
  std::vector<Evaluation> out;
  out.reserve(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok())
      throw BackendError("simulation of genome " + std::to_string(i) +
                         " failed: " + outcomes[i].error);
    out.push_back({outcomes[i].fitness, 1.0});
  }
  return out;
}

SimOutcome SimulatorBackend::evaluate_detail(const Genome& g) const {
  SimOutcome out;
  try {
    const Waveform wf = decoder_.decode(g);
    out.trace = simulate_experiment(wf, signal_, timing_, params_, instrument_);
    out.fitness = proxy_fitness(out.trace, timing_, tap_fraction_);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

ToyBackend::ToyBackend(const GeneSpace& space) {
  center_.resize(space.size());
  half_range_.resize(space.size());
  for (int i = 0; i < space.size(); ++i) {
    const auto& d = space.genes[i];
    center_[i] = 0.5 * (d.lo() + d.hi());
    half_range_[i] = std::max(0.5 * (d.hi() - d.lo()), 1e-12);
  }
}

double ToyBackend::fitness(const Genome& g) const {
  const Eigen::ArrayXd u = (g - center_) / half_range_;
  return 1.0 - u.square().mean();
}

std::vector<Evaluation> ToyBackend::evaluate(std::span<const Genome> genomes) {
  std::vector<Evaluation> out;
  out.reserve(genomes.size());
  for (const Genome& g : genomes) out.push_back({fitness(g), 1.0});
  return out;
}

EnergyConstrainedBackend::EnergyConstrainedBackend(PulseDecoder decoder,
                                                   EnergyConstraint constraint,
                                                   FitnessBackend& inner)
    : decoder_(decoder), constraint_(constraint), inner_(inner) {
  if (!(constraint_.reference_area > 0.0))
    throw ConfigError("energy constraint needs a positive reference area");
}

std::vector<Evaluation> EnergyConstrainedBackend::evaluate(
    std::span<const Genome> genomes) {
  std::vector<double> betas(genomes.size());
  std::vector<Genome> scaled(genomes.begin(), genomes.end());
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    betas[i] = resolve_renormalization(genomes[i], constraint_, decoder_);
    if (betas[i] != 1.0)
      scaled[i] = decoder_.scale_amplitudes(genomes[i], 1.0 / betas[i]);
  }
  std::vector<Evaluation> out = inner_.evaluate(scaled);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].beta = betas[i];
  return out;
}

}  // namespace pulseopt
