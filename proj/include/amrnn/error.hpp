#pragma once

#include <stdexcept>
#include <string>

namespace amrnn {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// ConfigError -> 1, ParseError/ValidationError -> 2, everything else -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or rank mismatch between tensors.
struct ShapeError : Error {
  using Error::Error;
};

// Operation invoked outside its stated domain (empty sequence, empty mask, ...).
struct PreconditionError : Error {
  using Error::Error;
};

// Malformed input file; message carries the line number where known.
struct ParseError : Error {
  using Error::Error;
};

// Structurally well-formed but semantically invalid data; message names the
// offending example id.
struct ValidationError : Error {
  using Error::Error;
};

// Bad configuration value.
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace amrnn
