#pragma once

#include <stdexcept>
#include <string>

namespace l2pub {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Lookup beyond the end of a tabulated function.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// A policy (or caller) asked to publish ids that are not in the queue.
class InvalidActionError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or malformed configuration. `field()` names the culprit.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Bad fee-trace input. `row()` is the 1-based data row (0 when not row-specific).
class IngestError : public Error {
 public:
  IngestError(std::size_t row, const std::string& what)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// The exact solver refuses instances whose state space is too large.
class SizeGuardError : public Error {
 public:
  SizeGuardError(double estimated_states, double limit)
      : Error("state space too large: estimated " + std::to_string(static_cast<long long>(estimated_states)) +
              " states exceeds limit " + std::to_string(static_cast<long long>(limit))),
        estimated_(estimated_states) {}
  double estimated_states() const noexcept { return estimated_; }

 private:
  double estimated_;
};

// Filesystem trouble (missing input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace l2pub
