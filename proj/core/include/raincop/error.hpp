#pragma once

#include <stdexcept>
#include <string>

namespace raincop {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Result not representable in double precision.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Malformed or inconsistent input files. The message names file, row and
// column where they are known.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// An internal consistency check failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace raincop
