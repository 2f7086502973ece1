#ifndef RLTRACK_ERRORS_HPP
#define RLTRACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rltrack {

// Invalid configuration value or inconsistent dimensions. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (files, sequences). CLI exit code 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical self-check failed (gradient check, NaN guard). CLI exit code 3.
class VerifyError : public std::runtime_error {
public:
  explicit VerifyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rltrack

#endif
