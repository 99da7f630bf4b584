#pragma once

#include <stdexcept>
#include <string>

namespace switchnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (dimension mismatch, bad index).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or corrupted input files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite gradients, parameter divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace switchnet
