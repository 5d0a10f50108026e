#pragma once

#include <stdexcept>
#include <string>

namespace eptrecon {

// Malformed configuration or physically inadmissible input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two fields that must share a grid do not.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical stage could not produce a usable result (degenerate data,
// stationary point, inadmissible admittivity).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be read or written, or its contents are malformed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eptrecon
