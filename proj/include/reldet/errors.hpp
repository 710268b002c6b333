#pragma once

#include <stdexcept>
#include <string>

namespace reldet {

// Input failed schema or semantic validation. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// File or stream could not be read/written. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace reldet
