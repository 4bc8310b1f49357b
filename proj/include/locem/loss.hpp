#pragma once

#include <cstdint>

namespace locem {

enum class LossKind : std::uint8_t { logistic, hinge, smoothed_hinge };

/// Margin surrogate loss. Every kind is nonincreasing in the margin and
/// 1-Lipschitz, so lipschitz() is 1 throughout:
///   logistic        l(g) = log(1 + exp(-g))
///   hinge           l(g) = max(0, target - g)
///   smoothed_hinge  l(g) = T * log(1 + exp(-g / T))
struct LossSpec {
  LossKind kind = LossKind::logistic;
  double margin_target = 1.0;  // hinge only, > 0
  double temperature = 0.1;    // smoothed_hinge only, > 0

  double value(double margin) const;
  double derivative(double margin) const;  // subgradient at the hinge kink
  double lipschitz() const { return 1.0; }

  static LossSpec logistic();
  static LossSpec hinge(double target);
  static LossSpec smoothed(double temperature);
};

}  // namespace locem
