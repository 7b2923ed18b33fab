#pragma once

#include <stdexcept>
#include <string>

namespace medfs {

// Base of everything the library throws. Subclasses split user/input
// problems (exit 1 in the CLI) from numerical failures (exit 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Dual variables outside [0, c) or off the equality constraint.
class FeasibilityError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace medfs
