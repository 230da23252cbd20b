#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptx {

/// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a kernel (e.g. 1/x for x <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace ptx
