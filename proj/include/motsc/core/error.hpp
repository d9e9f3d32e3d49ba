#pragma once

#include <stdexcept>
#include <string>

namespace motsc {

// Invalid user-supplied configuration (bad scenario file, bad flag values).
// The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A caller broke an API precondition (dimension mismatch, step after done,
// backward without a forward trace). The CLI maps this, like any other
// runtime failure, to exit code 3.
class contract_error : public std::logic_error {
 public:
  explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace motsc
