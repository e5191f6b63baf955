#pragma once

#include <stdexcept>
#include <string>

namespace labrisk {

// Bad input data, bad configuration, missing files. The CLI maps this to
// exit code 2; everything else that escapes is an internal failure (exit 1).
class UserError : public std::runtime_error {
 public:
  explicit UserError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace labrisk
