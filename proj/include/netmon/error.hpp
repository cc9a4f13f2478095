#pragma once

#include <stdexcept>
#include <string>

namespace netmon {

// Invalid parameters or inputs (maps to CLI exit code 2).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-convergence, spectral-bound violations, singular solves (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-system and parse failures (exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace netmon
