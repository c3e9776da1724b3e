#pragma once

#include <stdexcept>
#include <string>

namespace kdl {

// Invalid input or a violated precondition (bad config value, range too
// large for the box, duplicate points, ...). Maps to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical guard tripped at run time (thinning bound exceeded, SDE
// blow-up, infinite rate). Maps to exit code 2.
class NumericalGuard : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdl
