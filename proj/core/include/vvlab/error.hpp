#pragma once

#include <stdexcept>
#include <string>

namespace vvlab {

/// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something malformed: bad shapes, out-of-range indices,
// invalid configuration values.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class InterventionError : public Error {
 public:
  using Error::Error;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

// Files and formats.
class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Weight-file load failure; `kind` tells the failure classes apart.
class LoadError : public FormatError {
 public:
  enum class Kind { BadMagic, VersionMismatch, Manifest, Truncated };

  LoadError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Numerical failures.
class TrainingError : public Error {
 public:
  TrainingError(int epoch, const std::string& what) : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Source and destination runs are indistinguishable at the measurement point.
class DegeneratePairError : public Error {
 public:
  using Error::Error;
};

}  // namespace vvlab
