#pragma once

#include <stdexcept>
#include <string>

namespace carnot_lw {

/// Malformed input: bad dimensions, invalid parameters, unparsable descriptors.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical computation could not produce a meaningful value
/// (singular matrices, zero mass, unnormalized densities).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace carnot_lw
