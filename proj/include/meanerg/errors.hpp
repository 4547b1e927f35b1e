#pragma once

#include <stdexcept>
#include <string>

namespace meanerg {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A state outside the enumerated truncation had to be evaluated and no tail
/// rule was declared for it.
class UnresolvedStateError : public Error {
 public:
  explicit UnresolvedStateError(const std::string& state)
      : Error("unresolved state '" + state + "': mass outside the truncation and no tail rule"),
        state_(state) {}

  const std::string& state() const noexcept { return state_; }

 private:
  std::string state_;
};

/// Objects built over different state spaces were combined.
class SpaceMismatchError : public Error {
 public:
  using Error::Error;
};

/// Numerical solver failure (LP, SVD, ...).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized input.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace meanerg
