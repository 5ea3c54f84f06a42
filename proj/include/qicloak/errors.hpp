#pragma once

#include <stdexcept>
#include <string>

namespace qicloak {

// Base class for everything this library throws. The CLI maps subclasses to
// exit codes: input problems -> 2, numerical problems -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter is outside its documented domain (negative photon number, ...).
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// Operator/state shapes do not line up.
class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

// An attach or embed would exceed the configured basis-size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Basis growth hit the cap before the truncation tail reached its target.
class TruncationOverflowError : public Error {
 public:
  using Error::Error;
};

// Requested an SNR where the noise variance is zero (or numerically so).
class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

// Protocol ratio requested where both protocols have exactly zero signal.
class IndeterminateRatioError : public Error {
 public:
  using Error::Error;
};

// A signal-free configuration (mixer gain 1, counter efficiency 0, ...).
class ZeroSignalError : public Error {
 public:
  using Error::Error;
};

// A closed-form approximation was evaluated outside its validity region.
class OutOfRegimeError : public Error {
 public:
  using Error::Error;
};

// Config-file problem; carries the offending key and 1-based line number.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string key, int line)
      : Error(message), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace qicloak
