#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pulseopt/pulse_codec.hpp"
#include "pulseopt/rng.hpp"

namespace pulseopt {

/// One fitness evaluation. beta is the energy-renormalization divisor applied
/// by constrained backends (1 when no renormalization occurred).
struct Evaluation {
  double fitness = 0.0;
  double beta = 1.0;
};

/// Total function from genome to fitness, the stand-in for the physical
/// experiment. Implementations must be deterministic given their own
/// configuration; batch results are returned in input order.
class FitnessBackend {
 public:
  virtual ~FitnessBackend() = default;
  virtual std::vector<Evaluation> evaluate(std::span<const Genome> genomes) = 0;
};

/// Backend over a plain function; handy for toy objectives and tests.
class FunctionBackend : public FitnessBackend {
 public:
  explicit FunctionBackend(std::function<double(const Genome&)> fn) : fn_(std::move(fn)) {}
  std::vector<Evaluation> evaluate(std::span<const Genome> genomes) override {
    std::vector<Evaluation> out;
    out.reserve(genomes.size());
    for (const Genome& g : genomes) out.push_back({fn_(g), 1.0});
    return out;
  }

 private:
  std::function<double(const Genome&)> fn_;
};

/// Counts calls and genomes submitted to an inner backend (test support).
class CountingBackend : public FitnessBackend {
 public:
  explicit CountingBackend(FitnessBackend& inner) : inner_(inner) {}
  std::vector<Evaluation> evaluate(std::span<const Genome> genomes) override {
    ++batches_;
    genomes_ += genomes.size();
    return inner_.evaluate(genomes);
  }
  long batches() const { return batches_; }
  long genomes_submitted() const { return genomes_; }

 private:
  FitnessBackend& inner_;
  long batches_ = 0;
  long genomes_ = 0;
};

struct GAConfig {
  int genes = 16;
  int generations = 50;
  int population_size = 60;
  int parents_mating = 10;
  int tournament_size = 10;
  int elitism_size = 5;
  double mutation_probability = 0.3;
  uint64_t rng_seed = 1;
  /// Stop early when the best fitness has not improved for this many
  /// generations; 0 keeps the fixed generation count.
  int early_stop_patience = 0;

  int children_per_generation() const { return population_size - elitism_size; }
  void validate() const;  // throws ConfigError

  static GAConfig freeform_defaults(uint64_t seed = 1);
  static GAConfig gaussian_defaults(uint64_t seed = 1);
};

struct Individual {
  Genome genome;
  std::optional<double> fitness;
};

/// Memoization table keyed by exact genome value; a cached genome is never
/// re-submitted to the backend.
class EvaluationCache {
 public:
  const Evaluation* find(const Genome& g) const;
  void insert(const Genome& g, const Evaluation& e);
  std::size_t size() const { return map_.size(); }

  static std::vector<uint64_t> key(const Genome& g);

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<uint64_t>& k) const;
  };
  std::unordered_map<std::vector<uint64_t>, Evaluation, KeyHash> map_;
};

/// One evaluated individual as it entered the run history.
struct RunRecord {
  int generation = 0;
  Genome genome;
  double fitness = 0.0;
  double beta = 1.0;
};

using RunLog = std::vector<RunRecord>;

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;  // best so far, never decreasing
  int new_evaluations = 0;    // cache misses this generation
  Genome best_genome;         // snapshot of the best-so-far genome
};

/// Draws n_parents tournaments of k distinct individuals each and returns the
/// winners (highest fitness; ties go to the lower population index).
std::vector<Individual> tournament_select(const std::vector<Individual>& population,
                                          int tournament_size, int n_parents,
                                          RngStream& rng);

/// Each gene copied from either parent with probability 1/2.
Genome uniform_crossover(const Genome& parent_a, const Genome& parent_b, RngStream& rng);

/// Each gene replaced, with probability p, by a uniform draw from its domain.
Genome random_mutation(const Genome& g, double p, const GeneSpace& space, RngStream& rng);

/// Children built from the parent list traversed in consecutive overlapping
/// pairs (1,2), (2,3), ... cycling past the end.
std::vector<Individual> make_children(const std::vector<Individual>& parents,
                                      int n_children, const GAConfig& config,
                                      const GeneSpace& space, RngStream& crossover_rng,
                                      RngStream& mutation_rng);

/// Elites (top fitness, ties by lower index) copied unchanged plus freshly
/// bred children. Population size is preserved.
std::vector<Individual> next_generation(const std::vector<Individual>& population,
                                        const GAConfig& config, const GeneSpace& space,
                                        RngStream& selection_rng, RngStream& crossover_rng,
                                        RngStream& mutation_rng);

struct RunResult {
  Individual best;
  std::vector<GenerationRecord> generations;
  RunLog log;
  long backend_evaluations = 0;  // genomes actually sent to the backend
};

/// Called after each generation with its record and the log records appended
/// for it; used for streaming persistence.
using GenerationCallback =
    std::function<void(const GenerationRecord&, std::span<const RunRecord>)>;

/// Runs the full genetic algorithm: random initial population, then
/// tournament selection, uniform crossover, random mutation and elitism for
/// config.generations evaluated populations, with fitness memoization.
RunResult run_ga(const GeneSpace& space, FitnessBackend& backend, const GAConfig& config,
                 const GenerationCallback& on_generation = nullptr);

}  // namespace pulseopt
