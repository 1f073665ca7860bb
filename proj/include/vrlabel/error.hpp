#pragma once

#include <stdexcept>
#include <string>

namespace vrlabel {

// Input file does not conform to the documented schema.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input violates a model invariant (bad index, degenerate
// box, mismatched dimensions, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine produced a non-finite value or failed to make progress.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vrlabel
