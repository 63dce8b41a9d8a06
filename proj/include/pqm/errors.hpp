#pragma once

#include <stdexcept>

namespace pqm {

// Invalid run configuration: bad sizes, unknown labels, inconsistent options.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data-dependent failure at run time: degenerate curves, empty series, bad files.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A time bin produced no usable counts even after the allowed re-draws.
struct estimation_error : data_error {
  using data_error::data_error;
};

// Malformed input file; the message names the location.
struct parse_error : data_error {
  using data_error::data_error;
};

// A curve with zero perimeter (or otherwise unusable geometry).
struct degenerate_curve_error : data_error {
  using data_error::data_error;
};

}  // namespace pqm
