#pragma once

#include <stdexcept>
#include <string>

namespace glrc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A computation produced or was handed NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// A caller broke an API precondition (stale cache, missing buffer, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace glrc
