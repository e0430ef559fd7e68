#pragma once

#include <stdexcept>
#include <string>

namespace agg {

/// Caller passed arguments that violate an operation's precondition.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The run was wired up incorrectly (e.g. a delivery handler is missing).
class SetupError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An internal invariant broke; the run cannot continue.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// await_quiescence gave up. what() carries the diagnostic dump.
class QuiescenceTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A benchmark result disagrees with its reference oracle.
class OracleMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agg
