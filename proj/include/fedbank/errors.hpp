#pragma once

#include <stdexcept>
#include <string>

namespace fedbank {

// Resource guard tripped (table too large, oracle out of range).
// The CLI maps this to exit code 1; plain invalid input maps to 2.
class GuardError : public std::runtime_error {
 public:
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedbank
