#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "pulseopt/errors.hpp"

namespace pulseopt {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Minimal CSV emitter: header line, fixed column order, round-trip numeric
/// formatting, no quoting (fields must not contain commas).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace pulseopt
