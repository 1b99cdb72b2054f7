#ifndef VOXSEG_ERRORS_HPP
#define VOXSEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace voxseg {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported file content (header keys, truncation, element types).
struct FormatError : Error {
  using Error::Error;
};

/// Grid mismatch between volumes/masks, or a region out of bounds.
struct ShapeError : Error {
  using Error::Error;
};

/// Invalid parameter value (stability bounds, ranges, spec constraints).
struct ParamError : Error {
  using Error::Error;
};

/// Non-finite data or a diverging numerical scheme.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace voxseg

#endif
