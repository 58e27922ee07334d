#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pulseopt/rng.hpp"

namespace pulseopt {

/// Optimization variable: a flat vector of gene values. Gaussian pulses use
/// 3 genes (amplitude, width, delay), free-form pulses 16 control points.
using Genome = Eigen::ArrayXd;

/// Temporal extent over which a genome is decoded, in ns relative to the
/// signal-pulse center t0 = 0.
struct TimeWindow {
  double start = -120.0;
  double end = 40.0;
  double span() const { return end - start; }
};

/// Uniformly sampled, normalized drive amplitude.
struct Waveform {
  double t_start = 0.0;  // time of first sample (ns)
  double dt = 1.0;       // sample period (ns)
  Eigen::ArrayXd samples;

  Eigen::Index size() const { return samples.size(); }
  double time(Eigen::Index i) const { return t_start + dt * static_cast<double>(i); }
  double t_end() const { return time(size() - 1); }
};

/// Trapezoid integral of the waveform over its full span (ns * amplitude).
double waveform_area(const Waveform& wf);

/// Domain of one gene: either a finite ordered set of allowed values or a
/// closed real interval.
class GeneDomain {
 public:
  static GeneDomain grid(std::vector<double> values);
  static GeneDomain uniform_grid(double lo, double hi, int count);
  static GeneDomain integer_grid(int lo, int hi);
  static GeneDomain interval(double lo, double hi);

  bool is_grid() const { return !values_.empty(); }
  const std::vector<double>& values() const { return values_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  bool contains(double v) const;
  double sample(RngStream& rng) const;

 private:
  GeneDomain() = default;
  std::vector<double> values_;  // empty for intervals
  double lo_ = 0.0, hi_ = 0.0;
};

/// Per-gene domains for one encoding.
struct GeneSpace {
  std::vector<GeneDomain> genes;

  /// 3 genes: amplitude on a 50-level grid over [0,1], FWHM 1..80 ns,
  /// delay -60..0 ns (1 ns steps).
  static GeneSpace gaussian_pulse();

  /// 16 control points, each in [-0.2, 1].
  static GeneSpace freeform_pulse();

  int size() const { return static_cast<int>(genes.size()); }
  bool contains(const Genome& g) const;
};

/// Draws each gene uniformly from its allowed set or interval.
Genome random_genome(const GeneSpace& space, RngStream& rng);

/// Gaussian write-pulse parameters.
struct GaussianGenome {
  double amplitude = 0.0;  // peak drive amplitude, [0, 1]
  double fwhm = 40.0;      // ns
  double delay = -20.0;    // pulse center relative to the signal center (ns)

  static GaussianGenome from_genome(const Genome& g);
  Genome to_genome() const;
};

/// Samples a*exp(-4 ln2 (t-d)^2 / f^2) over the window.
/// Throws std::invalid_argument when the window holds fewer than 2 samples.
Waveform decode_gaussian(const GaussianGenome& g, const TimeWindow& w, double dt);

/// Smoothing cubic spline through the 16 control points placed evenly over
/// [w.start, w.end], sampled at dt and clipped to [0, 1].
Waveform decode_freeform(const Genome& g, const TimeWindow& w, double dt,
                         double spline_lambda = 0.0);

/// Pre-clip spline samples of a free-form genome (diagnostics and tests).
Eigen::ArrayXd freeform_spline_samples(const Genome& g, const TimeWindow& w, double dt,
                                       double spline_lambda = 0.0);

enum class Encoding { Gaussian, Freeform };

std::string to_string(Encoding e);
Encoding encoding_from_string(const std::string& s);

/// Bundles everything needed to turn a genome into a drive waveform.
struct PulseDecoder {
  Encoding encoding = Encoding::Freeform;
  TimeWindow window;
  double dt = 1.0;
  double spline_lambda = 0.0;

  GeneSpace space() const;
  Waveform decode(const Genome& g) const;

  /// Scales the genome's amplitude degrees of freedom: all control points for
  /// free-form genomes, only the amplitude gene for Gaussian ones.
  Genome scale_amplitudes(const Genome& g, double factor) const;
};

}  // namespace pulseopt
