#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace locem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// I/O failure (unreadable file, malformed format, unwritable directory).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment or method configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: diverged optimization, singular solve, non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Retrieved set too small for a local fit; callers trigger the fallback path.
class InsufficientNeighbors : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace locem
