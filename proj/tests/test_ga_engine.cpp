#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "pulseopt/errors.hpp"
#include "pulseopt/ga_engine.hpp"

using namespace pulseopt;

namespace {

std::vector<Individual> make_population(const std::vector<double>& fitnesses) {
  std::vector<Individual> pop;
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    Genome g(1);
    g[0] = static_cast<double>(i);
    pop.push_back({g, fitnesses[i]});
  }
  return pop;
}

GeneSpace single_interval_space(int genes, double lo, double hi) {
  GeneSpace s;
  for (int i = 0; i < genes; ++i) s.genes.push_back(GeneDomain::interval(lo, hi));
  return s;
}

}  // namespace

TEST_CASE("tournament_select") {
  SUBCASE("full-population tournament always returns the argmax") {
    const auto pop = make_population({5.0, 1.0, 9.0});
    RngStream rng(1);
    const auto parents = tournament_select(pop, 3, 10, rng);
    for (const auto& p : parents) CHECK(*p.fitness == 9.0);
  }

  SUBCASE("k=1 is uniform selection: frequencies within 3 sigma binomial") {
    const auto pop = make_population({1.0, 2.0, 3.0, 4.0, 5.0});
    RngStream rng(2);
    const int draws = 10000;
    std::map<double, int> counts;
    const auto parents = tournament_select(pop, 1, draws, rng);
    for (const auto& p : parents) ++counts[p.genome[0]];
    const double expect = draws / 5.0;
    const double sigma = std::sqrt(draws * 0.2 * 0.8);
    for (const auto& [id, c] : counts) {
      CHECK(c > expect - 3 * sigma);
      CHECK(c < expect + 3 * sigma);
    }
  }

  SUBCASE("fixed seed reproduces the parent list") {
    const auto pop = make_population({3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0});
    RngStream a(7), b(7);
    const auto pa = tournament_select(pop, 3, 6, a);
    const auto pb = tournament_select(pop, 3, 6, b);
    for (std::size_t i = 0; i < pa.size(); ++i)
      CHECK(pa[i].genome[0] == pb[i].genome[0]);
  }

  SUBCASE("unevaluated individual is a contract violation") {
    auto pop = make_population({1.0, 2.0});
    pop[1].fitness.reset();
    RngStream rng(1);
    CHECK_THROWS_AS(tournament_select(pop, 2, 2, rng), std::invalid_argument);
  }
}

TEST_CASE("uniform_crossover") {
  SUBCASE("identical parents give an identical child") {
    Genome g(4);
    g << 1.0, 2.0, 3.0, 4.0;
    RngStream rng(3);
    CHECK((uniform_crossover(g, g, rng) == g).all());
  }

  SUBCASE("some seed yields the all-from-a mask") {
    Genome a(3), b(3);
    a << 1.0, 2.0, 3.0;
    b << 4.0, 5.0, 6.0;
    bool found = false;
    for (uint64_t seed = 0; seed < 200 && !found; ++seed) {
      RngStream rng(seed);
      found = (uniform_crossover(a, b, rng) == a).all();
    }
    CHECK(found);
  }

  SUBCASE("per-gene source frequency is 1/2 within 3 sigma over 10k crossovers") {
    const int genes = 16, trials = 10000;
    Genome a = Genome::Zero(genes), b = Genome::Ones(genes);
    RngStream rng(5);
    Eigen::ArrayXd from_a = Eigen::ArrayXd::Zero(genes);
    for (int t = 0; t < trials; ++t) from_a += 1.0 - uniform_crossover(a, b, rng);
    const double sigma = std::sqrt(trials * 0.25);
    for (int i = 0; i < genes; ++i) {
      CHECK(from_a[i] > trials * 0.5 - 3 * sigma);
      CHECK(from_a[i] < trials * 0.5 + 3 * sigma);
    }
  }

  SUBCASE("mismatched gene counts are rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(uniform_crossover(Genome::Zero(3), Genome::Zero(4), rng),
                    std::invalid_argument);
  }
}

TEST_CASE("random_mutation") {
  SUBCASE("p = 0 is the identity") {
    const GeneSpace space = GeneSpace::freeform_pulse();
    RngStream rng(1);
    const Genome g = random_genome(space, rng);
    CHECK((random_mutation(g, 0.0, space, rng) == g).all());
  }

  SUBCASE("p = 1 on a single-value space is the identity") {
    GeneSpace space;
    space.genes.push_back(GeneDomain::grid({0.5}));
    Genome g(1);
    g[0] = 0.5;
    RngStream rng(2);
    CHECK(random_mutation(g, 1.0, space, rng)[0] == 0.5);
  }

  SUBCASE("mutated-gene fraction approximately p on continuous genes") {
    const GeneSpace space = single_interval_space(16, 0.0, 1.0);
    Genome g = Genome::Constant(16, 0.5);
    RngStream rng(11);
    const int trials = 10000;
    long changed = 0;
    for (int t = 0; t < trials; ++t)
      changed += (random_mutation(g, 0.3, space, rng) != g).count();
    const double n = 16.0 * trials;
    const double sigma = std::sqrt(n * 0.3 * 0.7);
    CHECK(changed > 0.3 * n - 3 * sigma);
    CHECK(changed < 0.3 * n + 3 * sigma);
  }

  SUBCASE("on a finite grid the change rate is p * (1 - 1/levels)") {
    GeneSpace space;
    space.genes.push_back(GeneDomain::uniform_grid(0.0, 1.0, 50));
    Genome g(1);
    g[0] = space.genes[0].values()[10];
    RngStream rng(12);
    const int trials = 20000;
    long changed = 0;
    for (int t = 0; t < trials; ++t)
      if (random_mutation(g, 0.3, space, rng)[0] != g[0]) ++changed;
    const double p_change = 0.3 * (1.0 - 1.0 / 50.0);
    const double sigma = std::sqrt(trials * p_change * (1 - p_change));
    CHECK(changed > trials * p_change - 3 * sigma);
    CHECK(changed < trials * p_change + 3 * sigma);
  }
}

TEST_CASE("next_generation") {
  GAConfig cfg;
  cfg.genes = 1;
  cfg.population_size = 6;
  cfg.parents_mating = 3;
  cfg.tournament_size = 2;
  cfg.elitism_size = 2;
  const GeneSpace space = single_interval_space(1, 0.0, 10.0);

  SUBCASE("elitism_size = population_size gives a fitness-sorted copy") {
    GAConfig all = cfg;
    all.elitism_size = all.population_size;
    all.parents_mating = 2;
    const auto pop = make_population({3.0, 9.0, 1.0, 7.0, 5.0, 2.0});
    RngStream s(1), x(2), m(3);
    const auto next = next_generation(pop, all, space, s, x, m);
    REQUIRE(next.size() == pop.size());
    const std::vector<double> want{9.0, 7.0, 5.0, 3.0, 2.0, 1.0};
    for (std::size_t i = 0; i < next.size(); ++i) CHECK(*next[i].fitness == want[i]);
  }

  SUBCASE("elite count and child count add up; children are unevaluated") {
    const auto pop = make_population({3.0, 9.0, 1.0, 7.0, 5.0, 2.0});
    RngStream s(1), x(2), m(3);
    const auto next = next_generation(pop, cfg, space, s, x, m);
    REQUIRE(next.size() == 6);
    int evaluated = 0;
    for (const auto& ind : next) evaluated += ind.fitness.has_value();
    CHECK(evaluated == 2);
    CHECK(*next[0].fitness == 9.0);
    CHECK(*next[1].fitness == 7.0);
  }

  SUBCASE("elitism ties break toward the lower population index") {
    const auto pop = make_population({5.0, 5.0, 5.0, 1.0, 1.0, 1.0});
    GAConfig all = cfg;
    all.elitism_size = 3;
    RngStream s(1), x(2), m(3);
    const auto next = next_generation(pop, all, space, s, x, m);
    CHECK(next[0].genome[0] == 0.0);
    CHECK(next[1].genome[0] == 1.0);
    CHECK(next[2].genome[0] == 2.0);
  }
}

TEST_CASE("pairing schedule cycles through overlapping consecutive pairs") {
  // parents with constant, distinct genomes; no mutation, so every child gene
  // value identifies which parent it came from
  const int n_parents = 10, n_children = 55;
  std::vector<Individual> parents;
  for (int i = 0; i < n_parents; ++i)
    parents.push_back({Genome::Constant(4, static_cast<double>(i)), 1.0});

  GAConfig cfg;
  cfg.genes = 4;
  cfg.mutation_probability = 0.0;
  const GeneSpace space = single_interval_space(4, 0.0, 100.0);
  RngStream x(31), m(32);
  const auto children = make_children(parents, n_children, cfg, space, x, m);
  REQUIRE(children.size() == n_children);

  for (int c = 0; c < n_children; ++c) {
    const double pa = static_cast<double>(c % n_parents);
    const double pb = static_cast<double>((c + 1) % n_parents);
    for (int gi = 0; gi < 4; ++gi) {
      const double v = children[c].genome[gi];
      CHECK((v == pa || v == pb));
    }
  }
}

namespace {

GeneSpace gaussian_space() { return GeneSpace::gaussian_pulse(); }

// separable toy objective used for the grid-oracle equivalence check
double toy_objective(const Genome& g, double a_star, double f_star, double d_star) {
  const double da = g[0] - a_star, df = g[1] - f_star, dd = g[2] - d_star;
  return -(da * da) - df * df / 6400.0 - dd * dd / 3600.0;
}

}  // namespace

TEST_CASE("run_ga finds the exhaustive-grid optimum on the toy objective") {
  const GeneSpace space = gaussian_space();
  const double a_star = space.genes[0].values()[30];
  const double f_star = 26.0, d_star = -38.0;

  // exhaustive grid search oracle
  double best_oracle = -1e300;
  Genome oracle_arg(3);
  for (double a : space.genes[0].values())
    for (double f : space.genes[1].values())
      for (double d : space.genes[2].values()) {
        Genome g(3);
        g << a, f, d;
        const double v = toy_objective(g, a_star, f_star, d_star);
        if (v > best_oracle) {
          best_oracle = v;
          oracle_arg = g;
        }
      }
  CHECK(best_oracle == 0.0);
  CHECK(oracle_arg[0] == a_star);

  int hits = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    FunctionBackend backend(
        [&](const Genome& g) { return toy_objective(g, a_star, f_star, d_star); });
    const GAConfig cfg = GAConfig::gaussian_defaults(seed);
    const RunResult res = run_ga(space, backend, cfg);
    if (res.best.genome[0] == oracle_arg[0] && res.best.genome[1] == oracle_arg[1] &&
        res.best.genome[2] == oracle_arg[2])
      ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("run_ga bookkeeping") {
  const GeneSpace space = gaussian_space();

  SUBCASE("constant objective: flat records, identical best genome snapshots") {
    FunctionBackend constant([](const Genome&) { return 0.25; });
    GAConfig cfg = GAConfig::gaussian_defaults(3);
    cfg.generations = 8;
    const RunResult res = run_ga(space, constant, cfg);
    REQUIRE(res.generations.size() == 8);
    for (const auto& rec : res.generations) {
      CHECK(rec.best_fitness == 0.25);
      CHECK((rec.best_genome == res.generations[0].best_genome).all());
    }
  }

  SUBCASE("backend call bound and cache economics") {
    FunctionBackend toy([](const Genome& g) { return -g.square().sum(); });
    CountingBackend counting(toy);
    GAConfig cfg = GAConfig::gaussian_defaults(5);
    const RunResult res = run_ga(space, counting, cfg);

    CHECK(counting.genomes_submitted() <= 60 + 55 * 24);
    CHECK(counting.genomes_submitted() == res.backend_evaluations);

    // distinct genomes in the log == backend calls; no genome has two fitness values
    std::map<std::vector<uint64_t>, double> seen;
    for (const RunRecord& r : res.log) {
      const auto k = EvaluationCache::key(r.genome);
      const auto it = seen.find(k);
      if (it == seen.end())
        seen.emplace(k, r.fitness);
      else
        CHECK(it->second == r.fitness);
    }
    CHECK(static_cast<long>(seen.size()) == res.backend_evaluations);

    long new_sum = 0;
    for (const auto& rec : res.generations) new_sum += rec.new_evaluations;
    CHECK(new_sum == res.backend_evaluations);
  }

  SUBCASE("best-so-far is non-decreasing and the log covers every individual") {
    FunctionBackend toy([](const Genome& g) { return -(g[0] - 0.5) * (g[0] - 0.5); });
    GAConfig cfg = GAConfig::gaussian_defaults(11);
    cfg.generations = 12;
    const RunResult res = run_ga(space, toy, cfg);
    CHECK(res.log.size() == static_cast<std::size_t>(12 * cfg.population_size));
    for (std::size_t i = 1; i < res.generations.size(); ++i)
      CHECK(res.generations[i].best_fitness >= res.generations[i - 1].best_fitness);
  }

  SUBCASE("identical seeds reproduce the run log exactly") {
    FunctionBackend toy([](const Genome& g) { return -g.square().sum(); });
    GAConfig cfg = GAConfig::gaussian_defaults(21);
    cfg.generations = 6;
    const RunResult r1 = run_ga(space, toy, cfg);
    const RunResult r2 = run_ga(space, toy, cfg);
    REQUIRE(r1.log.size() == r2.log.size());
    for (std::size_t i = 0; i < r1.log.size(); ++i) {
      CHECK(r1.log[i].generation == r2.log[i].generation);
      CHECK((r1.log[i].genome == r2.log[i].genome).all());
      CHECK(r1.log[i].fitness == r2.log[i].fitness);
    }
  }

  SUBCASE("population size and space membership hold every generation") {
    FunctionBackend toy([](const Genome& g) { return g[0]; });
    GAConfig cfg = GAConfig::gaussian_defaults(31);
    cfg.generations = 10;
    const RunResult res = run_ga(space, toy, cfg);
    std::map<int, int> per_gen;
    for (const RunRecord& r : res.log) {
      ++per_gen[r.generation];
      CHECK(space.contains(r.genome));
    }
    for (const auto& [gen, count] : per_gen) CHECK(count == cfg.population_size);
  }

  SUBCASE("generation callback streams records and a backend failure preserves them") {
    int calls_before_failure = 0;
    FunctionBackend failing([&](const Genome&) -> double {
      if (++calls_before_failure > 80) throw BackendError("device went away");
      return 1.0;
    });
    GAConfig cfg = GAConfig::gaussian_defaults(41);
    cfg.generations = 10;
    std::vector<GenerationRecord> streamed;
    long streamed_records = 0;
    try {
      run_ga(space, failing, cfg,
             [&](const GenerationRecord& rec, std::span<const RunRecord> records) {
               streamed.push_back(rec);
               streamed_records += static_cast<long>(records.size());
             });
      FAIL("expected BackendError");
    } catch (const BackendError&) {
    }
    CHECK(streamed.size() == 1);  // generation 0 completed (60 evals), gen 1 failed
    CHECK(streamed_records == 60);
  }

  SUBCASE("early stop patience halts a stale run") {
    FunctionBackend constant([](const Genome&) { return 1.0; });
    GAConfig cfg = GAConfig::gaussian_defaults(51);
    cfg.generations = 25;
    cfg.early_stop_patience = 3;
    const RunResult res = run_ga(space, constant, cfg);
    CHECK(res.generations.size() < 25);
  }
}

TEST_CASE("GAConfig validation names the offending field") {
  GAConfig cfg;
  cfg.population_size = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("population_size"), ConfigError);
  cfg = GAConfig{};
  cfg.tournament_size = 100;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("tournament_size"), ConfigError);
  cfg = GAConfig{};
  cfg.mutation_probability = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("mutation_probability"),
                       ConfigError);
}
