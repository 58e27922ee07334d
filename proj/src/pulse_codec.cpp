#include "pulseopt/pulse_codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pulseopt/numeric.hpp"
#include "pulseopt/spline.hpp"

namespace pulseopt {

double waveform_area(const Waveform& wf) { return trapezoid(wf.samples, wf.dt); }

GeneDomain GeneDomain::grid(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("gene grid must be non-empty");
  if (!std::is_sorted(values.begin(), values.end()))
    throw std::invalid_argument("gene grid must be sorted");
  if (std::adjacent_find(values.begin(), values.end()) != values.end())
    throw std::invalid_argument("gene grid must be duplicate-free");
  GeneDomain d;
  d.lo_ = values.front();
  d.hi_ = values.back();
  d.values_ = std::move(values);
  return d;
}

GeneDomain GeneDomain::uniform_grid(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("gene grid must be non-empty");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i)
    v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return grid(std::move(v));
}

GeneDomain GeneDomain::integer_grid(int lo, int hi) {
  std::vector<double> v;
  for (int i = lo; i <= hi; ++i) v.push_back(static_cast<double>(i));
  return grid(std::move(v));
}

GeneDomain GeneDomain::interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("gene interval needs lo < hi");
  GeneDomain d;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

bool GeneDomain::contains(double v) const {
  if (is_grid()) return std::binary_search(values_.begin(), values_.end(), v);
  return v >= lo_ && v <= hi_;
}

double GeneDomain::sample(RngStream& rng) const {
  if (is_grid()) return values_[rng.uniform_int(values_.size())];
  return rng.uniform(lo_, hi_);
}

GeneSpace GeneSpace::gaussian_pulse() {
  GeneSpace s;
  s.genes.push_back(GeneDomain::uniform_grid(0.0, 1.0, 50));
  s.genes.push_back(GeneDomain::integer_grid(1, 80));
  s.genes.push_back(GeneDomain::integer_grid(-60, 0));
  return s;
}

GeneSpace GeneSpace::freeform_pulse() {
  GeneSpace s;
  for (int i = 0; i < 16; ++i) s.genes.push_back(GeneDomain::interval(-0.2, 1.0));
  return s;
}

bool GeneSpace::contains(const Genome& g) const {
  if (g.size() != size()) return false;
  for (int i = 0; i < size(); ++i)
    if (!genes[i].contains(g[i])) return false;
  return true;
}

Genome random_genome(const GeneSpace& space, RngStream& rng) {
  Genome g(space.size());
  for (int i = 0; i < space.size(); ++i) g[i] = space.genes[i].sample(rng);
  return g;
}

GaussianGenome GaussianGenome::from_genome(const Genome& g) {
  if (g.size() != 3) throw std::invalid_argument("gaussian genome needs 3 genes");
  return {g[0], g[1], g[2]};
}

Genome GaussianGenome::to_genome() const {
  Genome g(3);
  g << amplitude, fwhm, delay;
  return g;
}

namespace {

Eigen::ArrayXd sample_times(const TimeWindow& w, double dt) {
  if (!(w.start < w.end)) throw std::invalid_argument("decode window needs start < end");
  if (!(dt > 0.0)) throw std::invalid_argument("sample period must be > 0");
  const auto n = static_cast<Eigen::Index>(std::floor(w.span() / dt + 1e-9)) + 1;
  if (n < 2)
    throw std::invalid_argument("decode window shorter than 2 samples at dt");
  return Eigen::ArrayXd::LinSpaced(n, w.start, w.start + dt * static_cast<double>(n - 1));
}

}  // namespace

Waveform decode_gaussian(const GaussianGenome& g, const TimeWindow& w, double dt) {
  if (!(g.fwhm > 0.0)) throw std::invalid_argument("gaussian fwhm must be > 0");
  const Eigen::ArrayXd t = sample_times(w, dt);
  Waveform wf{t[0], dt, {}};
  wf.samples = g.amplitude * (-kFourLn2 * ((t - g.delay) / g.fwhm).square()).exp();
  return wf;
}

Eigen::ArrayXd freeform_spline_samples(const Genome& g, const TimeWindow& w, double dt,
                                       double spline_lambda) {
  const Eigen::ArrayXd t = sample_times(w, dt);
  const Eigen::ArrayXd knots =
      Eigen::ArrayXd::LinSpaced(g.size(), w.start, w.end);
  const SmoothingSpline spline(knots, g, spline_lambda);
  return spline.evaluate(t);
}

Waveform decode_freeform(const Genome& g, const TimeWindow& w, double dt,
                         double spline_lambda) {
  if (g.size() < 2) throw std::invalid_argument("free-form genome needs >= 2 genes");
  Waveform wf{w.start, dt, freeform_spline_samples(g, w, dt, spline_lambda)};
  wf.samples = wf.samples.max(0.0).min(1.0);
  return wf;
}

std::string to_string(Encoding e) {
  return e == Encoding::Gaussian ? "gaussian" : "freeform";
}

Encoding encoding_from_string(const std::string& s) {
  if (s == "gaussian") return Encoding::Gaussian;
  if (s == "freeform") return Encoding::Freeform;
  throw std::invalid_argument("unknown encoding '" + s + "' (gaussian|freeform)");
}

GeneSpace PulseDecoder::space() const {
  return encoding == Encoding::Gaussian ? GeneSpace::gaussian_pulse()
                                        : GeneSpace::freeform_pulse();
}

Waveform PulseDecoder::decode(const Genome& g) const {
  if (encoding == Encoding::Gaussian)
    return decode_gaussian(GaussianGenome::from_genome(g), window, dt);
  return decode_freeform(g, window, dt, spline_lambda);
}

Genome PulseDecoder::scale_amplitudes(const Genome& g, double factor) const {
  Genome out = g;
  if (encoding == Encoding::Gaussian)
    out[0] *= factor;
  else
    out *= factor;
  return out;
}

}  // namespace pulseopt
