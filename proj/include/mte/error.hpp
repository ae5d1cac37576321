#ifndef MTE_ERROR_HPP_
#define MTE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mte {

// Error taxonomy mirrors the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, NumericError -> 4.
// DimensionError and MetricError are programming/protocol errors surfaced
// to the caller; the CLI maps them to 3.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mte

#endif  // MTE_ERROR_HPP_
