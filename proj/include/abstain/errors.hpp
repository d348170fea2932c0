#pragma once

#include <stdexcept>
#include <string>

namespace abstain {

// Bad user input: malformed data, out-of-range parameters, unknown labels.
// The CLI maps this to exit code 1.
class input_error : public std::invalid_argument {
 public:
  explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure inside an otherwise valid computation (singular systems,
// optimizer breakdown). The CLI maps this to exit code 2.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace abstain
