#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pulseopt/csv.hpp"
#include "pulseopt/errors.hpp"
#include "pulseopt/runlog_io.hpp"
#include "pulseopt/runner.hpp"

using namespace pulseopt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path("runner_test_out") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig toy_config(const fs::path& out, Encoding enc = Encoding::Gaussian) {
  RunConfig c;
  c.encoding = enc;
  c.backend = BackendKind::Toy;
  c.seed = 5;
  c.ga.generations = 6;
  c.ga_generations_explicit = true;
  c.output_dir = out.string();
  return c;
}

RunConfig small_sim_config(const fs::path& out) {
  RunConfig c;
  c.encoding = Encoding::Gaussian;
  c.backend = BackendKind::Sim;
  c.seed = 9;
  c.ga.generations = 3;
  c.ga.population_size = 12;
  c.ga.parents_mating = 4;
  c.ga.tournament_size = 4;
  c.ga.elitism_size = 2;
  c.ga_generations_explicit = true;
  c.sim.n_z = 24;
  c.sim.dt = 0.2;
  c.threads = 2;
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("run config json round trip and validation") {
  SUBCASE("load(save(c)) preserves the run definition") {
    RunConfig c = toy_config("x");
    c.energy_fractions = {0.3, 0.5};
    const json j = c.to_json();
    const RunConfig back = RunConfig::from_json(j);
    CHECK(back.encoding == c.encoding);
    CHECK(back.seed == c.seed);
    CHECK(back.effective_ga().generations == 6);
    CHECK(back.energy_fractions == c.energy_fractions);
    CHECK(back.to_json() == j);
  }

  SUBCASE("unknown keys are named in the error") {
    json j{{"encoding", "gaussian"}, {"populaton", 60}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(j), doctest::Contains("populaton"),
                         ConfigError);
    json j2{{"ga", {{"tornament_size", 10}}}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(j2), doctest::Contains("ga.tornament_size"),
                         ConfigError);
  }

  SUBCASE("invalid values are named in the error") {
    json j{{"ga", {{"population_size", 0}}}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(j), doctest::Contains("population_size"),
                         ConfigError);
    json j3{{"signal", {{"fwhm_ns", -2.0}}}};
    CHECK_THROWS_WITH_AS(RunConfig::from_json(j3), doctest::Contains("fwhm_ns"),
                         ConfigError);
  }

  SUBCASE("generations default follows the encoding unless pinned") {
    RunConfig c;
    c.ga_generations_explicit = false;
    c.encoding = Encoding::Gaussian;
    CHECK(c.effective_ga().generations == 25);
    CHECK(c.effective_ga().genes == 3);
    c.encoding = Encoding::Freeform;
    CHECK(c.effective_ga().generations == 50);
    CHECK(c.effective_ga().genes == 16);
  }
}

TEST_CASE("cmd_optimize artifacts") {
  const fs::path out = fresh_dir("optimize_toy");
  const RunConfig config = toy_config(out);
  const OptimizeOutcome outcome = cmd_optimize(config);

  SUBCASE("artifact files exist") {
    CHECK(fs::exists(outcome.artifacts.config_path));
    CHECK(fs::exists(outcome.artifacts.runlog_path));
    CHECK(fs::exists(outcome.artifacts.generations_path));
    CHECK(fs::exists(outcome.artifacts.best_path));
  }

  SUBCASE("generation record count equals the configured generations") {
    const auto recs = load_generation_records(outcome.artifacts.generations_path);
    CHECK(recs.size() == 6);
  }

  SUBCASE("free-form default run produces 50 generation records") {
    const fs::path out50 = fresh_dir("optimize_toy_freeform_default");
    RunConfig c = toy_config(out50, Encoding::Freeform);
    c.ga_generations_explicit = false;  // fall back to the encoding default
    const OptimizeOutcome r = cmd_optimize(c);
    const auto recs = load_generation_records(r.artifacts.generations_path);
    CHECK(recs.size() == 50);
    const RunLog log = load_runlog(r.artifacts.runlog_path);
    // distinct-genome count stays within the initial + children bound
    std::set<std::vector<uint64_t>> distinct;
    for (const RunRecord& rec : log) distinct.insert(EvaluationCache::key(rec.genome));
    CHECK(distinct.size() <= 60 + 55 * 49);
    CHECK(distinct.size() >= 60);
  }

  SUBCASE("run log round-trips through the JSONL file") {
    const RunLog log = load_runlog(outcome.artifacts.runlog_path);
    CHECK(log.size() == static_cast<std::size_t>(6 * config.ga.population_size));
    const auto recs = convergence_report(log);
    for (std::size_t i = 1; i < recs.size(); ++i)
      CHECK(recs[i].best_fitness >= recs[i - 1].best_fitness);
  }

  SUBCASE("reload of the snapshot reproduces the run byte for byte") {
    const RunConfig snapshot = RunConfig::load(outcome.artifacts.config_path);
    RunConfig again = snapshot;
    const fs::path out2 = fresh_dir("optimize_toy_repeat");
    again.output_dir = out2.string();
    cmd_optimize(again);
    CHECK(slurp(outcome.artifacts.runlog_path) == slurp(out2 / "runlog.jsonl"));
    CHECK(slurp(outcome.artifacts.generations_path) == slurp(out2 / "generations.jsonl"));
  }
}

TEST_CASE("cmd_optimize with the simulator writes the best trace") {
  const fs::path out = fresh_dir("optimize_sim");
  const OptimizeOutcome outcome = cmd_optimize(small_sim_config(out));
  CHECK(fs::exists(outcome.artifacts.trace_path));
  CHECK(*outcome.best.fitness > 0.0);

  // emit-plots regenerates the same bytes (idempotent re-emission)
  const std::string first = slurp(outcome.artifacts.trace_path);
  const EmitReport report = cmd_emit_plots(out);
  CHECK(report.errors.empty());
  CHECK(slurp(outcome.artifacts.trace_path) == first);
  CHECK(fs::exists(out / "convergence.csv"));
  CHECK(fs::exists(out / "violin.csv"));
  CHECK(fs::exists(out / "variance.csv"));

  const std::string conv_first = slurp(out / "convergence.csv");
  cmd_emit_plots(out);
  CHECK(slurp(out / "convergence.csv") == conv_first);
}

TEST_CASE("analyze emits the expected csv shapes") {
  const fs::path out = fresh_dir("analyze_freeform");
  RunConfig config = toy_config(out, Encoding::Freeform);
  config.ga.generations = 4;
  cmd_optimize(config);
  cmd_analyze(out, 8);

  // convergence rows = generations
  {
    std::ifstream f(out / "convergence.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "generation,best_fitness,new_evaluations");
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 4);
  }
  // violin gene indices span 1..16
  {
    std::ifstream f(out / "violin.csv");
    std::string line;
    std::getline(f, line);
    std::set<int> genes;
    while (std::getline(f, line)) genes.insert(std::stoi(line.substr(0, line.find(','))));
    CHECK(genes.size() == 16);
    CHECK(*genes.begin() == 1);
    CHECK(*genes.rbegin() == 16);
  }
}

TEST_CASE("cmd_sweep_width") {
  const fs::path out = fresh_dir("sweep_width");
  RunConfig config = toy_config(out);
  config.ga.generations = 3;
  config.signal_fwhm_sweep = {10.0, 18.0, 10.0};  // duplicate on purpose

  const WidthSweepOutcome sweep = cmd_sweep_width(config);
  CHECK(sweep.errors.empty());
  CHECK(sweep.rows.size() == 2);  // duplicate dropped
  CHECK(fs::exists(sweep.summary_path));
  CHECK(fs::exists(out / "width_10" / "gaussian" / "best.json"));
  CHECK(fs::exists(out / "width_10" / "freeform" / "best.json"));
  CHECK(fs::exists(out / "width_18" / "gaussian" / "runlog.jsonl"));

  std::ifstream f(sweep.summary_path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "fwhm_ns,eta_gaussian,eta_freeform");
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("cmd_sweep_energy") {
  const fs::path ref_dir = fresh_dir("energy_reference");
  RunConfig ref = toy_config(ref_dir, Encoding::Freeform);
  ref.ga.generations = 4;
  cmd_optimize(ref);

  SUBCASE("missing reference directory is a config error") {
    RunConfig sweep_cfg = toy_config(fresh_dir("energy_sweep_missing"), Encoding::Freeform);
    sweep_cfg.energy_fractions = {0.5};
    CHECK_THROWS_WITH_AS(cmd_sweep_energy(sweep_cfg, "does_not_exist"),
                         doctest::Contains("optimize"), ConfigError);
  }

  SUBCASE("encoding mismatch is rejected") {
    RunConfig sweep_cfg = toy_config(fresh_dir("energy_sweep_mismatch"), Encoding::Gaussian);
    sweep_cfg.energy_fractions = {0.5};
    CHECK_THROWS_AS(cmd_sweep_energy(sweep_cfg, ref_dir), ConfigError);
  }

  SUBCASE("constrained sweep honors the budget in every logged record") {
    const fs::path out = fresh_dir("energy_sweep");
    RunConfig sweep_cfg = toy_config(out, Encoding::Freeform);
    sweep_cfg.ga.generations = 3;
    sweep_cfg.energy_fractions = {0.4, 0.8};
    const EnergySweepOutcome sweep = cmd_sweep_energy(sweep_cfg, ref_dir);
    CHECK(sweep.errors.empty());
    REQUIRE(sweep.rows.size() == 2);
    CHECK(fs::exists(sweep.summary_path));

    const PulseDecoder decoder = sweep_cfg.decoder();
    for (const auto& row : sweep.rows) {
      CHECK(row.area_over_reference <= row.alpha * (1.0 + 1e-6));
      const fs::path dir = out / ("alpha_" + format_double(row.alpha));
      const RunLog log = load_runlog(dir / "runlog.jsonl");
      for (const RunRecord& r : log) {
        const Genome evaluated = decoder.scale_amplitudes(r.genome, 1.0 / r.beta);
        const double area = waveform_area(decoder.decode(evaluated));
        CHECK(area <= row.alpha * sweep.reference_area * (1.0 + 1e-6));
      }
    }
  }

  SUBCASE("alpha = 1 re-evaluation of the reference genome matches its fitness") {
    json best_doc;
    std::ifstream f(ref_dir / "best.json");
    f >> best_doc;
    Genome theta(best_doc.at("genome").size());
    for (std::size_t i = 0; i < best_doc.at("genome").size(); ++i)
      theta[static_cast<Eigen::Index>(i)] = best_doc.at("genome")[i];

    const RunConfig ref_cfg = RunConfig::load(ref_dir / "config.json");
    ToyBackend toy(ref_cfg.decoder().space());
    const double reference_area = waveform_area(ref_cfg.decoder().decode(theta));
    const EnergyConstraint c{reference_area, 1.0};
    const Evaluation e = energy_constrained_fitness(theta, c, ref_cfg.decoder(), toy);
    CHECK(e.beta == 1.0);
    CHECK(e.fitness == best_doc.at("fitness").get<double>());
  }
}

TEST_CASE("sweep entry seeds are stable and distinct") {
  const uint64_t a = sweep_entry_seed(7, "width=18:gaussian");
  CHECK(a == sweep_entry_seed(7, "width=18:gaussian"));
  CHECK(a != sweep_entry_seed(7, "width=18:freeform"));
  CHECK(a != sweep_entry_seed(8, "width=18:gaussian"));
}
