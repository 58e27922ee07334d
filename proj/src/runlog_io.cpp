#include "pulseopt/runlog_io.hpp"

#include "json.hpp"
#include "pulseopt/errors.hpp"

namespace pulseopt {

using nlohmann::json;

namespace {

json genome_to_json(const Genome& g) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < g.size(); ++i) arr.push_back(g[i]);
  return arr;
}

Genome genome_from_json(const json& arr) {
  Genome g(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) g[static_cast<Eigen::Index>(i)] = arr[i];
  return g;
}

}  // namespace

RunLogWriter::RunLogWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary) {
  if (!out_) throw ConfigError("cannot open run log '" + path.string() + "' for writing");
}

void RunLogWriter::append(std::span<const RunRecord> records) {
  for (const RunRecord& r : records) {
    json j{{"generation", r.generation},
           {"genome", genome_to_json(r.genome)},
           {"fitness", r.fitness},
           {"beta", r.beta}};
    out_ << j.dump() << '\n';
  }
}

void RunLogWriter::flush() { out_.flush(); }

RunLog load_runlog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read run log '" + path.string() + "'");
  RunLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ConfigError("corrupt run log line in '" + path.string() + "'");
    log.push_back({j.at("generation").get<int>(), genome_from_json(j.at("genome")),
                   j.at("fitness").get<double>(), j.value("beta", 1.0)});
  }
  return log;
}

void write_generation_records(const std::filesystem::path& path,
                              std::span<const GenerationRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  for (const GenerationRecord& r : records) {
    json j{{"generation", r.generation},
           {"best_fitness", r.best_fitness},
           {"new_evaluations", r.new_evaluations},
           {"best_genome", genome_to_json(r.best_genome)}};
    out << j.dump() << '\n';
  }
}

std::vector<GenerationRecord> load_generation_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::vector<GenerationRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("corrupt record in '" + path.string() + "'");
    records.push_back({j.at("generation").get<int>(), j.at("best_fitness").get<double>(),
                       j.at("new_evaluations").get<int>(),
                       genome_from_json(j.at("best_genome"))});
  }
  return records;
}

}  // namespace pulseopt
