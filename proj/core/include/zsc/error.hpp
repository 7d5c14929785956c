#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace zsc {

// Base of every error thrown by the library. The CLI maps subclasses to
// exit codes, so new failure modes should reuse one of these categories.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};
class DimensionError : public Error {
 public:
  using Error::Error;
};
class InputTooSmallError : public Error {
 public:
  using Error::Error;
};
class UnknownClassError : public Error {
 public:
  using Error::Error;
};
class NoProposalsError : public Error {
 public:
  using Error::Error;
};
class PlacementFailureError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};
class NumericalError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf guards. `where` names module.op so an abort points at the culprit.
inline void require_finite(double v, const char* where) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(where) + ": non-finite value");
  }
}

inline void require_all_finite(std::span<const double> vals, const char* where) {
  for (double v : vals) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string(where) + ": non-finite value");
    }
  }
}

}  // namespace zsc
