#pragma once

#include <stdexcept>
#include <string>

namespace iae {

// Bad configuration or malformed input. The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor shapes incompatible with the requested op.
class ShapeError : public InputError {
 public:
  ShapeError(std::size_t op_id, const std::string& op, const std::string& what)
      : InputError("op #" + std::to_string(op_id) + " (" + op + "): " + what),
        op_id_(op_id) {}

  std::size_t op_id() const { return op_id_; }

 private:
  std::size_t op_id_;
};

// Numerical failure at run time (non-finite gradient, divergence, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iae
