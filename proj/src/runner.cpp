#include "pulseopt/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "json.hpp"
#include "pulseopt/csv.hpp"
#include "pulseopt/errors.hpp"
#include "pulseopt/runlog_io.hpp"

namespace pulseopt {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t sweep_entry_seed(uint64_t root_seed, const std::string& tag) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return derive_seed(root_seed ^ h, 4);
}

namespace {

std::unique_ptr<FitnessBackend> make_backend(const RunConfig& config) {
  if (config.backend == BackendKind::Toy)
    return std::make_unique<ToyBackend>(config.decoder().space());
  return std::make_unique<SimulatorBackend>(config.decoder(), config.signal,
                                            config.timing, config.sim, config.instrument,
                                            config.threads, config.tap_fraction);
}

void write_trace_csv(const fs::path& path, const MemoryTrace& trace) {
  CsvWriter csv(path.string(), {"time_ns", "input_intensity", "output_intensity"});
  for (Eigen::Index i = 0; i < trace.size(); ++i)
    csv.row({format_double(trace.time(i)), format_double(trace.input_intensity[i]),
             format_double(trace.output_intensity[i])});
}

// Shared by cmd_optimize and the sweep entries; `constraint` adds the energy
// renormalization wrapper around the plain backend.
OptimizeOutcome run_one(const RunConfig& config, const EnergyConstraint* constraint) {
  config.validate();
  const fs::path out = config.output_dir;
  fs::create_directories(out);

  RunArtifacts art;
  art.dir = out;
  art.config_path = out / "config.json";
  art.runlog_path = out / "runlog.jsonl";
  art.generations_path = out / "generations.jsonl";
  art.best_path = out / "best.json";
  config.save(art.config_path);

  const PulseDecoder decoder = config.decoder();
  const GeneSpace space = decoder.space();
  std::unique_ptr<FitnessBackend> backend = make_backend(config);
  std::unique_ptr<EnergyConstrainedBackend> constrained;
  FitnessBackend* active = backend.get();
  if (constraint) {
    constrained = std::make_unique<EnergyConstrainedBackend>(decoder, *constraint, *backend);
    active = constrained.get();
  }

  RunLogWriter writer(art.runlog_path);
  const RunResult result =
      run_ga(space, *active, config.effective_ga(),
             [&](const GenerationRecord&, std::span<const RunRecord> records) {
               writer.append(records);
               writer.flush();
             });

  write_generation_records(art.generations_path, result.generations);

  OptimizeOutcome outcome;
  outcome.artifacts = art;
  outcome.best = result.best;
  for (const RunRecord& r : result.log)
    if (r.fitness == *result.best.fitness) {
      outcome.best_beta = r.beta;
      break;
    }
  const Genome evaluated =
      decoder.scale_amplitudes(result.best.genome, 1.0 / outcome.best_beta);
  outcome.best_area = waveform_area(decoder.decode(evaluated));

  json best{{"encoding", to_string(config.encoding)},
            {"fitness", *result.best.fitness},
            {"genome", json::array()},
            {"beta", outcome.best_beta},
            {"waveform_area", outcome.best_area},
            {"backend_evaluations", result.backend_evaluations}};
  for (Eigen::Index i = 0; i < result.best.genome.size(); ++i)
    best["genome"].push_back(result.best.genome[i]);
  {
    std::ofstream f(art.best_path, std::ios::binary);
    f << best.dump(2) << '\n';
  }

  if (config.backend == BackendKind::Sim) {
    art.trace_path = out / "trace_best.csv";
    const auto* sim = dynamic_cast<const SimulatorBackend*>(backend.get());
    const SimOutcome detail = sim->evaluate_detail(evaluated);
    if (!detail.ok()) throw BackendError("best-genome re-simulation failed: " + detail.error);
    write_trace_csv(art.trace_path, detail.trace);
    outcome.artifacts.trace_path = art.trace_path;
  }
  return outcome;
}

RunConfig entry_config(const RunConfig& base, Encoding enc, const fs::path& out,
                       const std::string& seed_tag) {
  RunConfig c = base;
  c.encoding = enc;
  c.output_dir = out.string();
  c.seed = sweep_entry_seed(base.seed, seed_tag);
  c.signal_fwhm_sweep.clear();
  c.energy_fractions.clear();
  return c;
}

}  // namespace

OptimizeOutcome cmd_optimize(const RunConfig& config) {
  const OptimizeOutcome outcome = run_one(config, nullptr);
  std::cout << "best fitness " << format_double(*outcome.best.fitness) << ", genome [";
  for (Eigen::Index i = 0; i < outcome.best.genome.size(); ++i)
    std::cout << (i ? ", " : "") << format_double(outcome.best.genome[i]);
  std::cout << "]\n";
  return outcome;
}

WidthSweepOutcome cmd_sweep_width(const RunConfig& config) {
  config.validate();
  if (config.signal_fwhm_sweep.empty())
    throw ConfigError("sweep-width needs signal.fwhm_list_ns");

  std::vector<double> widths;
  for (double w : config.signal_fwhm_sweep) {
    if (std::find(widths.begin(), widths.end(), w) != widths.end()) {
      std::cerr << "warning: duplicate width " << format_double(w) << " ns dropped\n";
      continue;
    }
    widths.push_back(w);
  }

  const fs::path root = config.output_dir;
  fs::create_directories(root);

  WidthSweepOutcome sweep;
  for (double w : widths) {
    WidthSweepRow row{w, std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN()};
    for (Encoding enc : {Encoding::Gaussian, Encoding::Freeform}) {
      const std::string tag = "width=" + format_double(w) + ":" + to_string(enc);
      RunConfig c = entry_config(config, enc,
                                 root / ("width_" + format_double(w)) / to_string(enc), tag);
      c.signal.fwhm = w;
      try {
        const OptimizeOutcome r = run_one(c, nullptr);
        (enc == Encoding::Gaussian ? row.eta_gaussian : row.eta_freeform) =
            *r.best.fitness;
      } catch (const std::exception& e) {
        sweep.errors.push_back(tag + ": " + e.what());
      }
    }
    sweep.rows.push_back(row);
  }

  sweep.summary_path = root / "summary.csv";
  CsvWriter csv(sweep.summary_path.string(), {"fwhm_ns", "eta_gaussian", "eta_freeform"});
  for (const auto& row : sweep.rows)
    csv.row({format_double(row.fwhm), format_double(row.eta_gaussian),
             format_double(row.eta_freeform)});
  return sweep;
}

EnergySweepOutcome cmd_sweep_energy(const RunConfig& config,
                                    const fs::path& reference_dir) {
  config.validate();
  if (config.energy_fractions.empty())
    throw ConfigError("sweep-energy needs energy.alpha_list");

  const fs::path ref_best = reference_dir / "best.json";
  const fs::path ref_config = reference_dir / "config.json";
  if (!fs::exists(ref_best) || !fs::exists(ref_config))
    throw ConfigError("reference artifacts not found in '" + reference_dir.string() +
                      "'; run `pulseopt optimize` first to learn the reference pulse");

  const RunConfig reference = RunConfig::load(ref_config);
  if (reference.encoding != config.encoding)
    throw ConfigError("reference run encoding (" + to_string(reference.encoding) +
                      ") does not match the sweep encoding (" +
                      to_string(config.encoding) + ")");

  json best_doc;
  {
    std::ifstream f(ref_best);
    f >> best_doc;
  }
  const auto& arr = best_doc.at("genome");
  Genome theta_hat(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    theta_hat[static_cast<Eigen::Index>(i)] = arr[i];
  const double reference_area =
      waveform_area(reference.decoder().decode(theta_hat));
  if (!(reference_area > 0.0))
    throw ConfigError("reference best genome decodes to zero pulse area");

  const fs::path root = config.output_dir;
  fs::create_directories(root);
  {
    json meta{{"reference_dir", reference_dir.string()},
              {"reference_area", reference_area}};
    std::ofstream f(root / "energy_reference.json", std::ios::binary);
    f << meta.dump(2) << '\n';
  }

  EnergySweepOutcome sweep;
  sweep.reference_area = reference_area;
  for (double alpha : config.energy_fractions) {
    const std::string tag = "alpha=" + format_double(alpha) + ":" + to_string(config.encoding);
    RunConfig c = entry_config(config, config.encoding,
                               root / ("alpha_" + format_double(alpha)), tag);
    const EnergyConstraint constraint{reference_area, alpha};
    EnergySweepRow row{alpha, std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN()};
    try {
      const OptimizeOutcome r = run_one(c, &constraint);
      row.eta = *r.best.fitness;
      row.area_over_reference = r.best_area / reference_area;
    } catch (const std::exception& e) {
      sweep.errors.push_back(tag + ": " + e.what());
    }
    sweep.rows.push_back(row);
  }

  sweep.summary_path = root / "summary.csv";
  CsvWriter csv(sweep.summary_path.string(), {"alpha", "eta", "area_over_reference"});
  for (const auto& row : sweep.rows)
    csv.row({format_double(row.alpha), format_double(row.eta),
             format_double(row.area_over_reference)});
  return sweep;
}

void cmd_analyze(const fs::path& run_dir, int bins, LogWeighting weighting) {
  const RunLog log = load_runlog(run_dir / "runlog.jsonl");

  const auto records = convergence_report(log);
  {
    CsvWriter csv((run_dir / "convergence.csv").string(),
                  {"generation", "best_fitness", "new_evaluations"});
    for (const auto& r : records)
      csv.row({std::to_string(r.generation), format_double(r.best_fitness),
               std::to_string(r.new_evaluations)});
  }

  const auto dists = gene_distributions(log, bins, weighting);
  {
    CsvWriter csv((run_dir / "violin.csv").string(), {"gene", "bin_center", "count"});
    for (const auto& d : dists)
      for (Eigen::Index b = 0; b < d.bin_centers.size(); ++b)
        csv.row({std::to_string(d.gene), format_double(d.bin_centers[b]),
                 std::to_string(d.bin_counts[b])});
  }

  const auto var = top_fraction_variance(log, 0.9, weighting);
  {
    CsvWriter csv((run_dir / "variance.csv").string(),
                  {"gene", "variance", "subset_size"});
    for (Eigen::Index g = 0; g < var.variance.size(); ++g)
      csv.row({std::to_string(g + 1), format_double(var.variance[g]),
               std::to_string(var.subset_size)});
  }
}

EmitReport cmd_emit_plots(const fs::path& run_dir) {
  EmitReport report;
  auto note = [&](const fs::path& p) { report.written.push_back(p.string()); };

  if (fs::exists(run_dir / "runlog.jsonl")) {
    try {
      cmd_analyze(run_dir);
      note(run_dir / "convergence.csv");
      note(run_dir / "violin.csv");
      note(run_dir / "variance.csv");
    } catch (const std::exception& e) {
      report.errors.push_back(std::string("analysis: ") + e.what());
    }
  }

  if (fs::exists(run_dir / "best.json") && fs::exists(run_dir / "config.json")) {
    try {
      const RunConfig config = RunConfig::load(run_dir / "config.json");
      if (config.backend == BackendKind::Sim) {
        json best_doc;
        {
          std::ifstream f(run_dir / "best.json");
          f >> best_doc;
        }
        Genome g(best_doc.at("genome").size());
        for (std::size_t i = 0; i < best_doc.at("genome").size(); ++i)
          g[static_cast<Eigen::Index>(i)] = best_doc.at("genome")[i];
        const double beta = best_doc.value("beta", 1.0);
        const Genome evaluated = config.decoder().scale_amplitudes(g, 1.0 / beta);

        SimulatorBackend sim(config.decoder(), config.signal, config.timing, config.sim,
                             config.instrument, config.threads, config.tap_fraction);
        const SimOutcome detail = sim.evaluate_detail(evaluated);
        if (!detail.ok()) throw BackendError(detail.error);
        write_trace_csv(run_dir / "trace_best.csv", detail.trace);
        note(run_dir / "trace_best.csv");
      }
    } catch (const std::exception& e) {
      report.errors.push_back(std::string("trace: ") + e.what());
    }
  }

  // width-sweep roots: fit the saturation model per encoding
  if (fs::exists(run_dir / "summary.csv")) {
    try {
      std::ifstream f(run_dir / "summary.csv");
      std::string line;
      std::getline(f, line);
      if (line.rfind("fwhm_ns,", 0) == 0) {
        std::vector<double> w, eg, ef;
        while (std::getline(f, line)) {
          double a, b, c;
          if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) == 3) {
            w.push_back(a);
            eg.push_back(b);
            ef.push_back(c);
          }
        }
        CsvWriter csv((run_dir / "bandwidth_fit.csv").string(),
                      {"encoding", "eta0", "gamma", "residual_norm"});
        for (const auto& [name, eta] :
             {std::pair{std::string("gaussian"), &eg}, {std::string("freeform"), &ef}}) {
          Eigen::ArrayXd fw(w.size()), et(w.size());
          Eigen::Index n = 0;
          for (std::size_t i = 0; i < w.size(); ++i)
            if (std::isfinite((*eta)[i])) {
              fw[n] = w[i];
              et[n] = (*eta)[i];
              ++n;
            }
          if (n < 3) {
            report.errors.push_back("bandwidth fit (" + name + "): fewer than 3 points");
            continue;
          }
          const BandwidthFit fit = bandwidth_fit(fw.head(n), et.head(n));
          csv.row({name, format_double(fit.eta0), format_double(fit.gamma),
                   format_double(fit.residual_norm)});
        }
        note(run_dir / "bandwidth_fit.csv");
      }
    } catch (const std::exception& e) {
      report.errors.push_back(std::string("bandwidth fit: ") + e.what());
    }
  }

  if (report.written.empty() && report.errors.empty())
    report.errors.push_back("no artifacts found in '" + run_dir.string() + "'");
  return report;
}

}  // namespace pulseopt
