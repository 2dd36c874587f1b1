#pragma once

#include <stdexcept>
#include <string>

namespace emprobe {

/// Bad input data, configuration, or arguments. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver failed to reach its tolerance, or a numerically singular system.
/// Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace emprobe
