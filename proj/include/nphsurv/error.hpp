#pragma once

#include <stdexcept>
#include <string>

namespace nphsurv {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or insufficient input data (empty arms, no events, bad rows).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a usable answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateVariance : public NumericalError {
 public:
  DegenerateVariance() : NumericalError("degenerate variance") {}
};

class MonotoneLikelihood : public NumericalError {
 public:
  MonotoneLikelihood() : NumericalError("monotone likelihood") {}
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last_iterate)
      : NumericalError(what), last_iterate_(last_iterate) {}
  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

}  // namespace nphsurv
