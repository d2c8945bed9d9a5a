#pragma once

#include <stdexcept>
#include <string>

namespace evsl {

/// Invalid or degenerate rig geometry (zero baseline, non-orthonormal rotation, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coordinate outside the domain of a lookup table or sensor.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Disparity that cannot be converted to a finite positive depth.
class InvalidDisparity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Pattern generation / sequence construction failures.
class PatternError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed files, wrong magic bytes, version mismatch, missing fields.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violations on frames and streams (dims mismatch, ordering, empty masks).
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace evsl
