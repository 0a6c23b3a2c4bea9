#pragma once

#include <stdexcept>
#include <string>

namespace vqctd {

// Error kinds surfaced by the library. All derive from std::runtime_error except
// plain argument mistakes, which use std::invalid_argument directly.

struct InvalidDimension : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedSize : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidCode : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroDimensionalCode : InvalidCode {
  using InvalidCode::InvalidCode;
};

struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vqctd
