#include "pulseopt/ga_engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pulseopt/errors.hpp"

namespace pulseopt {

void GAConfig::validate() const {
  if (genes < 1) throw ConfigError("ga.genes must be >= 1");
  if (generations < 1) throw ConfigError("ga.generations must be >= 1");
  if (population_size < 1) throw ConfigError("ga.population_size must be >= 1");
  if (elitism_size < 0 || elitism_size > population_size)
    throw ConfigError("ga.elitism_size must be in [0, population_size]");
  if (parents_mating < 2) throw ConfigError("ga.parents_mating must be >= 2");
  if (tournament_size < 1 || tournament_size > population_size)
    throw ConfigError("ga.tournament_size must be in [1, population_size]");
  if (mutation_probability < 0.0 || mutation_probability > 1.0)
    throw ConfigError("ga.mutation_probability must be in [0, 1]");
  if (early_stop_patience < 0) throw ConfigError("ga.early_stop_patience must be >= 0");
}

GAConfig GAConfig::freeform_defaults(uint64_t seed) {
  GAConfig c;
  c.genes = 16;
  c.generations = 50;
  c.rng_seed = seed;
  return c;
}

GAConfig GAConfig::gaussian_defaults(uint64_t seed) {
  GAConfig c;
  c.genes = 3;
  c.generations = 25;
  c.rng_seed = seed;
  return c;
}

std::vector<uint64_t> EvaluationCache::key(const Genome& g) {
  std::vector<uint64_t> k(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double v = g[i] == 0.0 ? 0.0 : g[i];  // fold -0.0 into +0.0
    k[i] = std::bit_cast<uint64_t>(v);
  }
  return k;
}

std::size_t EvaluationCache::KeyHash::operator()(const std::vector<uint64_t>& k) const {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (uint64_t w : k) {
    for (int b = 0; b < 8; ++b) {
      h ^= (w >> (8 * b)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

const Evaluation* EvaluationCache::find(const Genome& g) const {
  const auto it = map_.find(key(g));
  return it == map_.end() ? nullptr : &it->second;
}

void EvaluationCache::insert(const Genome& g, const Evaluation& e) {
  map_.emplace(key(g), e);
}

std::vector<Individual> tournament_select(const std::vector<Individual>& population,
                                          int tournament_size, int n_parents,
                                          RngStream& rng) {
  const int n = static_cast<int>(population.size());
  if (tournament_size < 1 || tournament_size > n)
    throw std::invalid_argument("tournament size must be in [1, population size]");
  for (const Individual& ind : population)
    if (!ind.fitness)
      throw std::invalid_argument("tournament_select: unevaluated individual");

  std::vector<int> pool(n);
  std::vector<Individual> parents;
  parents.reserve(n_parents);
  for (int p = 0; p < n_parents; ++p) {
    std::iota(pool.begin(), pool.end(), 0);
    // partial Fisher-Yates: k distinct entrants per tournament
    int winner = -1;
    for (int j = 0; j < tournament_size; ++j) {
      const int pick = j + static_cast<int>(rng.uniform_int(n - j));
      std::swap(pool[j], pool[pick]);
      const int idx = pool[j];
      if (winner < 0 || *population[idx].fitness > *population[winner].fitness ||
          (*population[idx].fitness == *population[winner].fitness && idx < winner))
        winner = idx;
    }
    parents.push_back(population[winner]);
  }
  return parents;
}

Genome uniform_crossover(const Genome& parent_a, const Genome& parent_b, RngStream& rng) {
  if (parent_a.size() != parent_b.size())
    throw std::invalid_argument("uniform_crossover: mismatched gene counts");
  Genome child(parent_a.size());
  for (Eigen::Index i = 0; i < child.size(); ++i)
    child[i] = rng.bernoulli(0.5) ? parent_a[i] : parent_b[i];
  return child;
}

Genome random_mutation(const Genome& g, double p, const GeneSpace& space, RngStream& rng) {
  if (g.size() != space.size())
    throw std::invalid_argument("random_mutation: genome does not match space");
  Genome out = g;
  for (int i = 0; i < space.size(); ++i)
    if (rng.bernoulli(p)) out[i] = space.genes[i].sample(rng);
  return out;
}

namespace {

// Indices sorted by fitness descending, ties by lower population index.
std::vector<int> rank_by_fitness(const std::vector<Individual>& population) {
  std::vector<int> order(population.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return *population[a].fitness > *population[b].fitness;
  });
  return order;
}

}  // namespace

std::vector<Individual> make_children(const std::vector<Individual>& parents,
                                      int n_children, const GAConfig& config,
                                      const GeneSpace& space, RngStream& crossover_rng,
                                      RngStream& mutation_rng) {
  const int n_parents = static_cast<int>(parents.size());
  std::vector<Individual> children;
  children.reserve(n_children);
  for (int c = 0; c < n_children; ++c) {
    const Genome& a = parents[c % n_parents].genome;
    const Genome& b = parents[(c + 1) % n_parents].genome;
    Genome child = uniform_crossover(a, b, crossover_rng);
    child = random_mutation(child, config.mutation_probability, space, mutation_rng);
    children.push_back({std::move(child), std::nullopt});
  }
  return children;
}

std::vector<Individual> next_generation(const std::vector<Individual>& population,
                                        const GAConfig& config, const GeneSpace& space,
                                        RngStream& selection_rng, RngStream& crossover_rng,
                                        RngStream& mutation_rng) {
  for (const Individual& ind : population)
    if (!ind.fitness) throw std::invalid_argument("next_generation: unevaluated individual");

  const std::vector<int> order = rank_by_fitness(population);
  std::vector<Individual> next;
  next.reserve(population.size());
  for (int e = 0; e < config.elitism_size; ++e) next.push_back(population[order[e]]);

  const int n_children = config.children_per_generation();
  if (n_children > 0) {
    const std::vector<Individual> parents = tournament_select(
        population, config.tournament_size, config.parents_mating, selection_rng);
    std::vector<Individual> children =
        make_children(parents, n_children, config, space, crossover_rng, mutation_rng);
    for (Individual& c : children) next.push_back(std::move(c));
  }
  return next;
}

RunResult run_ga(const GeneSpace& space, FitnessBackend& backend, const GAConfig& config,
                 const GenerationCallback& on_generation) {
  config.validate();
  if (config.genes != space.size())
    throw ConfigError("ga.genes does not match the gene space");

  RngStream init_rng(derive_seed(config.rng_seed, 0));
  RngStream selection_rng(derive_seed(config.rng_seed, 1));
  RngStream crossover_rng(derive_seed(config.rng_seed, 2));
  RngStream mutation_rng(derive_seed(config.rng_seed, 3));

  std::vector<Individual> population;
  population.reserve(config.population_size);
  for (int i = 0; i < config.population_size; ++i)
    population.push_back({random_genome(space, init_rng), std::nullopt});

  RunResult result;
  EvaluationCache cache;
  std::optional<double> best_fitness;
  int stale_generations = 0;

  for (int gen = 0; gen < config.generations; ++gen) {
    // evaluate cache misses in population order, de-duplicated within the batch
    std::vector<Genome> batch;
    std::vector<std::vector<uint64_t>> batch_keys;
    for (const Individual& ind : population) {
      if (!space.contains(ind.genome))
        throw std::logic_error("genome left its gene space");
      const auto k = EvaluationCache::key(ind.genome);
      if (cache.find(ind.genome) == nullptr &&
          std::find(batch_keys.begin(), batch_keys.end(), k) == batch_keys.end()) {
        batch.push_back(ind.genome);
        batch_keys.push_back(k);
      }
    }
    if (!batch.empty()) {
      const std::vector<Evaluation> evals = backend.evaluate(batch);
      if (evals.size() != batch.size())
        throw BackendError("backend returned a result count different from its batch");
      for (std::size_t i = 0; i < batch.size(); ++i) cache.insert(batch[i], evals[i]);
      result.backend_evaluations += static_cast<long>(batch.size());
    }

    const std::size_t log_mark = result.log.size();
    const double previous_best =
        best_fitness ? *best_fitness : -std::numeric_limits<double>::infinity();
    for (Individual& ind : population) {
      const Evaluation* e = cache.find(ind.genome);
      ind.fitness = e->fitness;
      result.log.push_back({gen, ind.genome, e->fitness, e->beta});
      if (!best_fitness || e->fitness > *best_fitness) {
        best_fitness = e->fitness;
        result.best = {ind.genome, e->fitness};
      }
    }

    result.generations.push_back({gen, *best_fitness, static_cast<int>(batch.size()),
                                  result.best.genome});
    if (on_generation)
      on_generation(result.generations.back(),
                    std::span<const RunRecord>(result.log).subspan(log_mark));

    if (config.early_stop_patience > 0) {
      stale_generations = *best_fitness > previous_best ? 0 : stale_generations + 1;
      if (stale_generations >= config.early_stop_patience) break;
    }

    if (gen + 1 < config.generations)
      population = next_generation(population, config, space, selection_rng,
                                   crossover_rng, mutation_rng);
  }
  return result;
}

}  // namespace pulseopt
