#include "pulseopt/memory_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <thread>

#include "pulseopt/errors.hpp"
#include "pulseopt/numeric.hpp"

namespace pulseopt {

void SimParams::validate() const {
  if (!(optical_depth > 0.0)) throw ConfigError("sim.optical_depth must be > 0");
  if (gamma < 0.0) throw ConfigError("sim.gamma must be >= 0");
  if (spin_decay < 0.0) throw ConfigError("sim.spin_decay must be >= 0");
  if (omega_max < 0.0) throw ConfigError("sim.omega_max must be >= 0");
  if (n_z < 2) throw ConfigError("sim.n_z must be >= 2");
  if (!(dt > 0.0)) throw ConfigError("sim.dt_int_ns must be > 0");
}

void ExperimentTiming::validate() const {
  if (!(storage_time > 0.0)) throw ConfigError("timing.storage_time_ns must be > 0");
  if (!(read_fwhm > 0.0)) throw ConfigError("timing.read_fwhm_ns must be > 0");
}

double signal_field(const SignalSpec& spec, double t) {
  return spec.amplitude * std::exp(-2.0 * M_LN2 * (t / spec.fwhm) * (t / spec.fwhm));
}

Eigen::ArrayXd make_signal(const SignalSpec& spec, double t0, double dt, Eigen::Index n) {
  if (!(spec.fwhm > 0.0)) throw ConfigError("signal.fwhm_ns must be > 0");
  Eigen::ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = signal_field(spec, t0 + dt * static_cast<double>(i));
  return out;
}

namespace {

// Exact first-order low-pass response to the piecewise-linear interpolant of
// a sampled waveform (zero drive outside the sampled span).
class FilteredPwl {
 public:
  FilteredPwl(const Waveform& wf, double tau) : wf_(wf), tau_(tau) {
    const Eigen::Index n = wf.size();
    state_ = Eigen::ArrayXd::Zero(n);
    if (tau_ <= 0.0) return;
    for (Eigen::Index k = 0; k + 1 < n; ++k)
      state_[k + 1] = segment_value(k, state_[k], wf.dt);
  }

  double operator()(double t) const {
    const Eigen::Index n = wf_.size();
    if (tau_ <= 0.0) {
      if (t < wf_.t_start || t > wf_.t_end()) return 0.0;
      return sample_at(wf_.samples, wf_.t_start, wf_.dt, t);
    }
    if (t <= wf_.t_start) return 0.0;
    if (t >= wf_.t_end())
      return state_[n - 1] * std::exp(-(t - wf_.t_end()) / tau_);
    const double x = (t - wf_.t_start) / wf_.dt;
    const auto k = std::min(static_cast<Eigen::Index>(x), n - 2);
    return segment_value(k, state_[k], t - wf_.time(k));
  }

 private:
  // y' = (x - y)/tau with x linear on segment k; exact solution at offset dt.
  double segment_value(Eigen::Index k, double y0, double dt) const {
    const double x0 = wf_.samples[k];
    const double slope = (wf_.samples[k + 1] - x0) / wf_.dt;
    return (y0 - x0 + slope * tau_) * std::exp(-dt / tau_) + x0 + slope * (dt - tau_);
  }

  const Waveform& wf_;
  double tau_;
  Eigen::ArrayXd state_;
};

// Exact low-pass response to a Gaussian drive (erf closed form).
double filtered_gaussian(double t, double center, double fwhm, double tau) {
  const double k = kFourLn2 / (fwhm * fwhm);
  if (tau <= 0.0) return std::exp(-k * (t - center) * (t - center));
  const double mu = center + 1.0 / (2.0 * k * tau);
  const double arg = std::sqrt(k) * (t - mu);
  if (arg < -26.0) return 0.0;  // below double underflow of the erfc factor
  const double log_pref = (center - t) / tau + 1.0 / (4.0 * k * tau * tau);
  const double pref = std::sqrt(M_PI / k) / (2.0 * tau);
  return pref * std::exp(log_pref) * std::erfc(-arg);
}

}  // namespace

RabiEnvelope apply_instrument(const Waveform& wf, const InstrumentModel& m,
                              double omega_max) {
  const FilteredPwl filt(wf, m.tau());
  RabiEnvelope env{wf.t_start, wf.dt, Eigen::ArrayXd(wf.size())};
  for (Eigen::Index i = 0; i < wf.size(); ++i) {
    const double drive = std::clamp(filt(wf.time(i)), 0.0, 1.0);
    env.omega[i] = omega_max * std::sqrt(drive);
  }
  return env;
}

MemoryTrace simulate_experiment(const Waveform& write, const SignalSpec& signal,
                                const ExperimentTiming& timing, const SimParams& params,
                                const InstrumentModel& instrument) {
  params.validate();
  timing.validate();
  if (!(signal.fwhm > 0.0)) throw ConfigError("signal.fwhm_ns must be > 0");
  if (instrument.rise_time < 0.0)
    throw ConfigError("instrument.aom_rise_time_ns must be >= 0");
  if (write.size() < 2) throw ConfigError("write waveform needs >= 2 samples");

  const double dt = params.dt;
  const double storage = timing.storage_time;
  const double tau = instrument.tau();

  double t0 = timing.trace_start;
  if (std::isnan(t0))
    t0 = std::min({write.t_start, -storage / 2.0, -3.5 * signal.fwhm}) - 10.0;
  double t1 = timing.trace_end;
  if (std::isnan(t1))
    t1 = storage + std::max(storage / 2.0, 3.0 * timing.read_fwhm) + 10.0;
  if (!(t1 > t0)) throw ConfigError("timing trace window is empty");

  const auto n = static_cast<Eigen::Index>(std::ceil((t1 - t0) / dt - 1e-9)) + 1;

  // explicit RK4 stability: the stiffest local rate must stay well inside
  // the stability region
  const double rate = std::hypot(params.gamma, params.detuning) + params.omega_max +
                      params.spin_decay +
                      0.5 * params.optical_depth * params.gamma / params.n_z;
  if (dt * rate > 2.5)
    throw BackendError(
        "integrator step violates the RK4 stability bound: dt * rate = " +
        std::to_string(dt * rate) + " > 2.5 (rate = |gamma + i*detuning| + omega_max + "
        "spin_decay + optical_depth*gamma/(2 n_z)); reduce sim.dt_int_ns below " +
        std::to_string(2.5 / rate));

  // control drive: filtered write waveform plus filtered Gaussian read pulse,
  // both exact in t so RK4 keeps its order at the half steps
  const FilteredPwl write_drive(write, tau);
  auto drive_at = [&](double t) {
    const double d =
        write_drive(t) + filtered_gaussian(t, storage, timing.read_fwhm, tau);
    return std::clamp(d, 0.0, 1.0);
  };
  Eigen::ArrayXd omega_half(2 * n - 1);
  for (Eigen::Index j = 0; j < omega_half.size(); ++j)
    omega_half[j] = params.omega_max *
                    std::sqrt(drive_at(t0 + 0.5 * dt * static_cast<double>(j)));
  Eigen::ArrayXd signal_half(2 * n - 1);
  for (Eigen::Index j = 0; j < signal_half.size(); ++j)
    signal_half[j] = signal_field(signal, t0 + 0.5 * dt * static_cast<double>(j));

  // dark interval where both control tails are negligible; the spin wave is
  // advanced analytically there
  Eigen::Index gap_lo = n, gap_hi = n;
  {
    const double dark_from =
        std::max(write.t_end() + 12.0 * tau, 3.5 * signal.fwhm);
    const double dark_to = storage - 3.0 * timing.read_fwhm;
    const auto lo = static_cast<Eigen::Index>(std::ceil((dark_from - t0) / dt));
    const auto hi = static_cast<Eigen::Index>(std::floor((dark_to - t0) / dt));
    if (lo >= 0 && hi < n && hi - lo >= 8) {
      gap_lo = lo;
      gap_hi = hi;
    }
  }

  using cd = std::complex<double>;
  const int nz = params.n_z;
  const double dz = 1.0 / nz;
  const double sqrt_d = std::sqrt(params.optical_depth);
  const cd iunit(0.0, 1.0);
  const cd coup_full = iunit * sqrt_d * dz;        // edge-to-edge field step
  const cd coup_half = 0.5 * coup_full;            // edge-to-center
  const cd pol_decay(-params.gamma, -params.detuning);
  const cd field_src = iunit * sqrt_d * params.gamma;

  Eigen::ArrayXcd P = Eigen::ArrayXcd::Zero(nz), S = Eigen::ArrayXcd::Zero(nz);
  Eigen::ArrayXcd dP1(nz), dS1(nz), dP2(nz), dS2(nz), dP3(nz), dS3(nz), dP4(nz),
      dS4(nz), Pt(nz), St(nz);

  // dP/dt = -(gamma + i*detuning) P + i sqrt(d) gamma E + i Omega S
  // dS/dt = -spin_decay S + i Omega P        (E swept along z by midpoint rule)
  auto deriv = [&](const Eigen::ArrayXcd& p, const Eigen::ArrayXcd& s, double e_in,
                   double omega, Eigen::ArrayXcd& dp, Eigen::ArrayXcd& ds) {
    cd edge(e_in, 0.0);
    for (int z = 0; z < nz; ++z) {
      const cd center = edge + coup_half * p[z];
      dp[z] = pol_decay * p[z] + field_src * center + iunit * omega * s[z];
      ds[z] = -params.spin_decay * s[z] + iunit * omega * p[z];
      edge += coup_full * p[z];
    }
  };

  auto exit_field = [&](const Eigen::ArrayXcd& p, double e_in) {
    cd edge(e_in, 0.0);
    for (int z = 0; z < nz; ++z) edge += coup_full * p[z];
    return edge;
  };

  MemoryTrace trace;
  trace.t_start = t0;
  trace.dt = dt;
  trace.input_intensity = signal_half(Eigen::seq(0, 2 * n - 2, 2)).square();
  trace.output_intensity = Eigen::ArrayXd::Zero(n);

  Eigen::Index i = 0;
  while (true) {
    trace.output_intensity[i] = std::norm(exit_field(P, signal_half[2 * i]));
    if (i == n - 1) break;

    if (i == gap_lo) {
      const double dark = dt * static_cast<double>(gap_hi - gap_lo);
      S *= std::exp(-params.spin_decay * dark);
      P.setZero();
      i = gap_hi;  // output stays zero across the dark interval
      continue;
    }

    const double h = dt;
    deriv(P, S, signal_half[2 * i], omega_half[2 * i], dP1, dS1);
    Pt = P + 0.5 * h * dP1;
    St = S + 0.5 * h * dS1;
    deriv(Pt, St, signal_half[2 * i + 1], omega_half[2 * i + 1], dP2, dS2);
    Pt = P + 0.5 * h * dP2;
    St = S + 0.5 * h * dS2;
    deriv(Pt, St, signal_half[2 * i + 1], omega_half[2 * i + 1], dP3, dS3);
    Pt = P + h * dP3;
    St = S + h * dS3;
    deriv(Pt, St, signal_half[2 * i + 2], omega_half[2 * i + 2], dP4, dS4);
    P += (h / 6.0) * (dP1 + 2.0 * dP2 + 2.0 * dP3 + dP4);
    S += (h / 6.0) * (dS1 + 2.0 * dS2 + 2.0 * dS3 + dS4);
    ++i;
  }

  trace.final_spin_norm = S.abs2().sum() * dz;
  if (!trace.output_intensity.allFinite() || !std::isfinite(trace.final_spin_norm))
    throw BackendError(
        "integration diverged (non-finite trace); the configuration exceeds the "
        "integrator's stable regime, reduce sim.dt_int_ns");
  return trace;
}

std::vector<SimOutcome> evaluate_batch(
    std::span<const Genome> genomes, const PulseDecoder& decoder,
    const SignalSpec& signal, const ExperimentTiming& timing, const SimParams& params,
    const InstrumentModel& instrument,
    const std::function<double(const MemoryTrace&)>& objective, int threads) {
  std::vector<SimOutcome> results(genomes.size());
  if (genomes.empty()) return results;

  if (threads <= 0)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(genomes.size()));

  const auto stride = static_cast<std::size_t>(threads);
  auto work = [&](std::size_t offset) {
    for (std::size_t idx = offset; idx < genomes.size(); idx += stride) {
      SimOutcome& out = results[idx];
      try {
        const Waveform wf = decoder.decode(genomes[idx]);
        out.trace = simulate_experiment(wf, signal, timing, params, instrument);
        out.fitness = objective(out.trace);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(stride);
    for (std::size_t t = 0; t < stride; ++t) pool.emplace_back(work, t);
    for (std::thread& t : pool) t.join();
  }
  return results;
}

}  // namespace pulseopt
