#pragma once

#include <stdexcept>
#include <string>

namespace mopx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameters, violated budget bounds, malformed files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (arm out of range, empty set).
class DomainError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The problem instance itself is degenerate (no feasible arm, zero gap).
class InstanceError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace mopx
