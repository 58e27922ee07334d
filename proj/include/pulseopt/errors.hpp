#pragma once

#include <stdexcept>
#include <string>

namespace pulseopt {

/// Invalid or inconsistent run configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure inside a fitness backend, e.g. integrator instability
/// (CLI exit code 2).
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pulseopt
