#pragma once

#include <stdexcept>
#include <string>

namespace holeburn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration, dataset or schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite residuals, or a normal matrix that stays singular at every damping level.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class NoResonance : public Error {
 public:
  using Error::Error;
};

}  // namespace holeburn
