#pragma once

#include <stdexcept>
#include <string>

namespace eventimpact {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration: malformed config file, missing referenced paths,
/// inconsistent windows. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad or missing input data: parse failures, calendar coverage holes,
/// missing dates. CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A required upstream stage output is absent. CLI exit code 3.
class MissingStageError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-positive predictive variance, divergent sampler,
/// rank-deficient moment matrix. CLI exit code 4.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace eventimpact
