#pragma once

#include <stdexcept>
#include <string>

namespace scs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration was requested on a tree with more paths than the cap.
class EnumerationInfeasible : public Error {
 public:
  using Error::Error;
};

/// A run configuration could not be parsed or validated. `field()` holds the
/// dotted path of the offending key, e.g. "sampler.truncation_ratio".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace scs
