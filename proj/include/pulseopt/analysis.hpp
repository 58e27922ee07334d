#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pulseopt/ga_engine.hpp"

namespace pulseopt {

/// Whether distribution statistics count each distinct genome once (cache
/// hits say nothing about exploration) or every logged evaluation.
enum class LogWeighting { UniqueGenomes, AllRecords };

/// Violin-plot source data for one gene: summary statistics plus a fixed-bin
/// histogram over the observed range.
struct GeneDistribution {
  int gene = 0;  // 1-based index
  long count = 0;
  double min = 0.0, max = 0.0;
  double q25 = 0.0, median = 0.0, q75 = 0.0;
  Eigen::ArrayXd bin_centers;
  Eigen::ArrayXi bin_counts;
};

/// Per-gene spread of the well-performing subset of a run.
struct VarianceReport {
  Eigen::ArrayXd variance;  // population variance per gene
  long subset_size = 0;
  double fitness_threshold = 0.0;
};

/// Saturation fit of efficiency versus signal width:
/// eta(fwhm) = eta0 / sqrt(1 + (4 ln2 / (fwhm * gamma))^2).
struct BandwidthFit {
  double eta0 = 0.0;
  double gamma = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  Eigen::ArrayXd fwhm_points, eta_points;  // the fitted data
};

double bandwidth_model(double fwhm, double eta0, double gamma);

/// Rebuilds the per-generation convergence history (best-so-far fitness and
/// first-seen genome counts) from a persisted run log.
std::vector<GenerationRecord> convergence_report(const RunLog& log);

/// Distribution of the values explored for each gene. All genomes in the log
/// must share one encoding (equal gene counts).
std::vector<GeneDistribution> gene_distributions(
    const RunLog& log, int bins = 40, LogWeighting weighting = LogWeighting::UniqueGenomes);

/// Per-gene variance over the solutions whose fitness reaches the given
/// fraction of the best fitness (0.9 keeps the top 10% band). The subset
/// always contains the best solution.
VarianceReport top_fraction_variance(const RunLog& log, double fraction = 0.9,
                                     LogWeighting weighting = LogWeighting::UniqueGenomes);

/// Least-squares fit of (eta0, gamma); needs >= 3 points with distinct
/// widths. Throws std::domain_error on rank-deficient input.
BandwidthFit bandwidth_fit(const Eigen::ArrayXd& fwhm, const Eigen::ArrayXd& eta);

}  // namespace pulseopt
