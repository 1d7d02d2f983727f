#pragma once

#include <stdexcept>
#include <string>

namespace popnet {

// Base class for all popnet errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid run setup: bad population size, incompatible detector,
// self-interaction, head start out of range, and the like.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed protocol or experiment file. Carries the 1-based line number
// of the offending line (0 when the problem is the file as a whole,
// e.g. a missing directive).
struct ParseError : Error {
  int line;
  ParseError(int line_number, const std::string& message)
      : Error("line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
};

// Filesystem-level failures (unreadable input, unwritable output).
struct IoError : Error {
  using Error::Error;
};

}  // namespace popnet
