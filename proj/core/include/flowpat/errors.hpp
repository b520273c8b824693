#pragma once

#include <stdexcept>
#include <string>

namespace flowpat {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, numeric 4.
// Contract violations (API misuse, bad hyperparameters) map to config.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowpat
