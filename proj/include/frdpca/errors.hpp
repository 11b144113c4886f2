#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frdpca {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes do not agree (r > p, mismatched bases, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unusable input values.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Matrix is numerically rank deficient; for subspace iteration this means the iterate collapsed.
class RankError : public Error {
 public:
  using Error::Error;
};

/// A closed-form limit was requested outside the regime where it exists.
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// Data or directions that make an estimator undefined (all Kendall pairs tied, zero bilinear variance).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Malformed wire frame. `offset()` is the byte position at which decoding failed.
class FramingError : public Error {
 public:
  FramingError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Coordinator/worker protocol failure: timeout, disconnect, duplicate or unexpected message.
class SessionError : public Error {
 public:
  static constexpr long kNoMachine = -1;
  SessionError(const std::string& what, long machine = kNoMachine) : Error(what), machine_(machine) {}
  /// Machine index the failure is attributed to, or kNoMachine.
  long machine() const noexcept { return machine_; }

 private:
  long machine_;
};

}  // namespace frdpca
