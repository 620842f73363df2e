#pragma once

#include <stdexcept>
#include <string>

namespace fgcl {

// Precondition violated by a caller-supplied argument.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operand shapes do not fit the primitive.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN or infinity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Records parse individually but disagree with each other or the header.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation is not valid in the object's current state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// No task could be scored.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fgcl
