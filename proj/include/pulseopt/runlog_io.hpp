#pragma once

#include <filesystem>
#include <fstream>
#include <span>

#include "pulseopt/ga_engine.hpp"

namespace pulseopt {

/// Streaming JSONL writer for run records; one self-describing record per
/// line, flushed per generation so a killed run loses at most the in-flight
/// generation.
class RunLogWriter {
 public:
  explicit RunLogWriter(const std::filesystem::path& path);
  void append(std::span<const RunRecord> records);
  void flush();

 private:
  std::ofstream out_;
};

RunLog load_runlog(const std::filesystem::path& path);

void write_generation_records(const std::filesystem::path& path,
                              std::span<const GenerationRecord> records);
std::vector<GenerationRecord> load_generation_records(const std::filesystem::path& path);

}  // namespace pulseopt
