#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bamsdn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Routing and bookkeeping.
class NoRoute : public Error { using Error::Error; };
class UnknownLsp : public Error { using Error::Error; };
class NotActive : public Error { using Error::Error; };
class CapacityViolation : public Error { using Error::Error; };

// Decision engine.
class InvalidBc : public Error { using Error::Error; };
class Infeasible : public Error { using Error::Error; };
class ModelMismatch : public Error { using Error::Error; };

// Switch fabric.
class Conflict : public Error { using Error::Error; };
class UnknownSwitch : public Error { using Error::Error; };

class ClassificationFailure : public Error { using Error::Error; };

// Raised when a rate has an empty denominator.
class UndefinedRate : public Error { using Error::Error; };

class IoError : public Error { using Error::Error; };

// A checked model invariant did not hold; always a bug, never user error.
class InvariantViolation : public Error { using Error::Error; };

class ValidationError : public Error { using Error::Error; };

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + " [" + field + "]: " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace bamsdn
