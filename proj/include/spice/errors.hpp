#pragma once

#include <stdexcept>
#include <string>

namespace spice {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A matrix that was required to be positive definite is not (a Cholesky
// pivot fell below tolerance, or an inverse does not exist).
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

// An iterative routine hit its iteration cap before reaching tolerance.
class ConvergenceFailure : public Error {
 public:
  explicit ConvergenceFailure(const std::string& msg) : Error(msg) {}
};

// A variance (diagonal covariance entry) required to be positive is <= 0.
class NonPositiveVariance : public Error {
 public:
  explicit NonPositiveVariance(const std::string& msg) : Error(msg) {}
};

class TooFewObservations : public Error {
 public:
  explicit TooFewObservations(const std::string& msg) : Error(msg) {}
};

class TooFewValues : public Error {
 public:
  explicit TooFewValues(const std::string& msg) : Error(msg) {}
};

class IndexOutOfRange : public Error {
 public:
  explicit IndexOutOfRange(const std::string& msg) : Error(msg) {}
};

class MissingClass : public Error {
 public:
  explicit MissingClass(const std::string& msg) : Error(msg) {}
};

class InsufficientClassCount : public Error {
 public:
  explicit InsufficientClassCount(const std::string& msg) : Error(msg) {}
};

class MissingLabels : public Error {
 public:
  explicit MissingLabels(const std::string& msg) : Error(msg) {}
};

// Every tuning-grid fit failed; no lambda can be selected.
class AllFitsFailed : public Error {
 public:
  explicit AllFitsFailed(const std::string& msg) : Error(msg) {}
};

// A random model draw was degenerate (e.g. an all-zero adjacency).
class DegenerateModel : public Error {
 public:
  explicit DegenerateModel(const std::string& msg) : Error(msg) {}
};

// Malformed input file (CSV parse failure); message names the location.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

}  // namespace spice
