#pragma once

#include "locem/common.hpp"

#include <cstdint>

namespace locem {

/// Positive-definite kernel on vectors. `bound` is the documented sup of |k|
/// on the intended domain; it is exact (1) for gaussian and informational for
/// the unbounded kinds.
struct KernelSpec {
  enum class Kind : std::uint8_t { gaussian, polynomial, linear };

  Kind kind = Kind::gaussian;
  double bandwidth = 1.0;  // gaussian, > 0
  int degree = 2;          // polynomial, >= 1
  double offset = 1.0;     // polynomial, >= 0
  double bound = 1.0;

  double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;

  /// Kernel value as a function of the squared distance / inner product pieces;
  /// lets callers reuse cached cross terms.
  double from_sq_dist(double sq_dist) const;      // gaussian only
  double from_inner(double inner) const;          // linear / polynomial only

  static KernelSpec gaussian(double bandwidth);
  static KernelSpec polynomial(int degree, double offset);
  static KernelSpec linear();
};

}  // namespace locem
