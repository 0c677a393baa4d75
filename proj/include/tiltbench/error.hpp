#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tiltbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A distribution or model parameter is outside its domain (e.g. a
/// non-positive variance or rate).
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: wrong shapes, non-finite values, bad CSV.
class DataError : public Error {
 public:
  using Error::Error;
};

/// The requested benchmark target cannot be met by any admissible tilt.
class InfeasibleTargetError : public Error {
 public:
  InfeasibleTargetError(const std::string& what, double lo, double hi)
      : Error(what), lo_(lo), hi_(hi) {}

  /// Attainable interval for the target, when one is known.
  double attainable_lo() const { return lo_; }
  double attainable_hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// An MCMC sampler produced non-finite conditional parameters.
class SamplerDivergenceError : public Error {
 public:
  SamplerDivergenceError(const std::string& what, std::int64_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

/// A derived quantity violated an invariant that the inputs guarantee.
class InternalInvariantError : public Error {
 public:
  using Error::Error;
};

/// Bad run configuration; names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace tiltbench
