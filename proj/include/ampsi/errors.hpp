#pragma once

#include <stdexcept>
#include <string>

namespace ampsi {

// Error taxonomy mirroring the CLI exit codes: configuration/parameter/shape
// problems exit 1, numeric divergence exits 2, I/O failures exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent vector/matrix shapes.
struct DimensionError : Error {
  using Error::Error;
};

// Out-of-range model or algorithm parameter.
struct ParameterError : Error {
  using Error::Error;
};

// Malformed experiment configuration (bad file, bad key, bad value).
struct ConfigError : Error {
  using Error::Error;
};

// Non-finite values produced by the iteration.
struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace ampsi
