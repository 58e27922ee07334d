#include "pulseopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "pulseopt/numeric.hpp"

namespace pulseopt {

std::vector<GenerationRecord> convergence_report(const RunLog& log) {
  if (log.empty()) throw std::invalid_argument("convergence_report: empty run log");

  std::set<std::vector<uint64_t>> seen;
  std::map<int, GenerationRecord> by_gen;
  double best = -std::numeric_limits<double>::infinity();
  Genome best_genome;

  for (const RunRecord& r : log) {
    if (r.fitness > best) {
      best = r.fitness;
      best_genome = r.genome;
    }
    auto& rec = by_gen
                    .try_emplace(r.generation,
                                 GenerationRecord{r.generation, best, 0, best_genome})
                    .first->second;
    rec.best_fitness = best;
    rec.best_genome = best_genome;
    if (seen.insert(EvaluationCache::key(r.genome)).second) ++rec.new_evaluations;
  }

  std::vector<GenerationRecord> out;
  out.reserve(by_gen.size());
  for (auto& [gen, rec] : by_gen) out.push_back(std::move(rec));
  return out;
}

namespace {

// Genome rows used by the statistics, deduplicated when requested.
std::vector<const Genome*> select_rows(const RunLog& log, LogWeighting weighting) {
  std::vector<const Genome*> rows;
  rows.reserve(log.size());
  std::set<std::vector<uint64_t>> seen;
  for (const RunRecord& r : log) {
    if (weighting == LogWeighting::UniqueGenomes &&
        !seen.insert(EvaluationCache::key(r.genome)).second)
      continue;
    rows.push_back(&r.genome);
  }
  return rows;
}

}  // namespace

std::vector<GeneDistribution> gene_distributions(const RunLog& log, int bins,
                                                 LogWeighting weighting) {
  if (log.empty()) throw std::invalid_argument("gene_distributions: empty run log");
  if (bins < 1) throw std::invalid_argument("gene_distributions: bins must be >= 1");
  const Eigen::Index genes = log.front().genome.size();
  for (const RunRecord& r : log)
    if (r.genome.size() != genes)
      throw std::invalid_argument("gene_distributions: mixed encodings in run log");

  const auto rows = select_rows(log, weighting);
  const auto n = static_cast<Eigen::Index>(rows.size());

  std::vector<GeneDistribution> out;
  out.reserve(genes);
  for (Eigen::Index gi = 0; gi < genes; ++gi) {
    Eigen::ArrayXd values(n);
    for (Eigen::Index i = 0; i < n; ++i) values[i] = (*rows[i])[gi];
    std::sort(values.begin(), values.end());

    GeneDistribution d;
    d.gene = static_cast<int>(gi) + 1;
    d.count = n;
    d.min = values[0];
    d.max = values[n - 1];
    d.q25 = quantile_sorted(values, 0.25);
    d.median = quantile_sorted(values, 0.5);
    d.q75 = quantile_sorted(values, 0.75);

    d.bin_centers.resize(bins);
    d.bin_counts = Eigen::ArrayXi::Zero(bins);
    const double lo = d.min, width = d.max - d.min;
    if (width <= 0.0) {
      // degenerate spread: a single bin carries all the mass
      d.bin_centers.setConstant(lo);
      d.bin_counts[0] = static_cast<int>(n);
    } else {
      for (int b = 0; b < bins; ++b)
        d.bin_centers[b] = lo + width * (b + 0.5) / bins;
      for (Eigen::Index i = 0; i < n; ++i) {
        auto b = static_cast<int>((values[i] - lo) / width * bins);
        b = std::clamp(b, 0, bins - 1);
        ++d.bin_counts[b];
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

VarianceReport top_fraction_variance(const RunLog& log, double fraction,
                                     LogWeighting weighting) {
  if (log.empty()) throw std::invalid_argument("top_fraction_variance: empty run log");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("top_fraction_variance: fraction must be in (0, 1]");
  const Eigen::Index genes = log.front().genome.size();

  double best = -std::numeric_limits<double>::infinity();
  for (const RunRecord& r : log) best = std::max(best, r.fitness);
  // "within (1 - fraction) of the best" stated so the best solution always
  // qualifies, also for non-positive fitness values
  const double threshold = best - (1.0 - fraction) * std::abs(best);

  std::set<std::vector<uint64_t>> seen;
  std::vector<const Genome*> rows;
  for (const RunRecord& r : log) {
    if (r.fitness < threshold) continue;
    if (r.genome.size() != genes)
      throw std::invalid_argument("top_fraction_variance: mixed encodings in run log");
    if (weighting == LogWeighting::UniqueGenomes &&
        !seen.insert(EvaluationCache::key(r.genome)).second)
      continue;
    rows.push_back(&r.genome);
  }

  VarianceReport rep;
  rep.subset_size = static_cast<long>(rows.size());
  rep.fitness_threshold = threshold;
  rep.variance = Eigen::ArrayXd::Zero(genes);
  for (Eigen::Index gi = 0; gi < genes; ++gi) {
    double mean = 0.0;
    for (const Genome* g : rows) mean += (*g)[gi];
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (const Genome* g : rows) var += ((*g)[gi] - mean) * ((*g)[gi] - mean);
    rep.variance[gi] = var / static_cast<double>(rows.size());
  }
  return rep;
}

double bandwidth_model(double fwhm, double eta0, double gamma) {
  const double q = kFourLn2 / (fwhm * gamma);
  return eta0 / std::sqrt(1.0 + q * q);
}

BandwidthFit bandwidth_fit(const Eigen::ArrayXd& fwhm, const Eigen::ArrayXd& eta) {
  const Eigen::Index n = fwhm.size();
  if (n < 3 || eta.size() != n)
    throw std::invalid_argument("bandwidth_fit needs >= 3 (fwhm, eta) points");
  if ((fwhm <= 0.0).any()) throw std::invalid_argument("bandwidth_fit: fwhm must be > 0");
  if ((fwhm.maxCoeff() - fwhm.minCoeff()) < 1e-12 * fwhm.maxCoeff())
    throw std::domain_error("bandwidth_fit: all widths identical, fit is rank-deficient");

  // starting point: eta0 slightly above the largest sample, gamma from the
  // narrowest point's implied saturation ratio
  double eta0 = std::min(1.0, eta.maxCoeff() * 1.02);
  if (!(eta0 > 0.0)) eta0 = 0.5;
  double gamma;
  {
    Eigen::Index narrow;
    fwhm.minCoeff(&narrow);
    const double ratio = std::clamp(eta[narrow] / eta0, 1e-3, 0.999);
    const double q = std::sqrt(1.0 / (ratio * ratio) - 1.0);
    gamma = kFourLn2 / (fwhm[narrow] * std::max(q, 1e-6));
  }

  auto residuals = [&](double e0, double g, Eigen::ArrayXd& r) {
    for (Eigen::Index i = 0; i < n; ++i) r[i] = bandwidth_model(fwhm[i], e0, g) - eta[i];
    return r.square().sum();
  };

  Eigen::ArrayXd r(n), j0(n), j1(n);
  double cost = residuals(eta0, gamma, r);
  double damping = 1e-3;
  int iterations = 0;

  for (int it = 0; it < 200; ++it) {
    ++iterations;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = kFourLn2 / (fwhm[i] * gamma);
      const double s = std::sqrt(1.0 + q * q);
      j0[i] = 1.0 / s;
      j1[i] = eta0 * q * q / (gamma * s * s * s);
    }
    Eigen::Matrix2d JtJ;
    JtJ << (j0 * j0).sum(), (j0 * j1).sum(), (j0 * j1).sum(), (j1 * j1).sum();
    Eigen::Vector2d Jtr(-(j0 * r).sum(), -(j1 * r).sum());

    bool accepted = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Eigen::Matrix2d A = JtJ;
      A(0, 0) *= 1.0 + damping;
      A(1, 1) *= 1.0 + damping;
      const Eigen::Vector2d step = A.ldlt().solve(Jtr);
      const double e0_try = std::clamp(eta0 + step[0], 1e-9, 1.0);
      const double g_try = std::max(gamma + step[1], 1e-12);
      Eigen::ArrayXd r_try(n);
      const double cost_try = residuals(e0_try, g_try, r_try);
      if (cost_try < cost) {
        eta0 = e0_try;
        gamma = g_try;
        r = r_try;
        const double improvement = cost - cost_try;
        cost = cost_try;
        damping = std::max(damping * 0.3, 1e-12);
        accepted = true;
        if (improvement < 1e-16 * (1.0 + cost)) it = 200;  // converged
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) break;
  }

  return {eta0, gamma, std::sqrt(cost), iterations, fwhm, eta};
}

}  // namespace pulseopt
