#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdfm3sf {

#ifdef CDFM3SF_REAL32
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<int64_t>;

// Thrown for contract violations: shape mismatches, bad arguments, malformed files.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ValueError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ValueError(msg);
}

inline void check_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

// Floor division (C++ '/' truncates toward zero).
inline int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace cdfm3sf
