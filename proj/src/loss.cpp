#include "locem/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace locem {

namespace {

// log(1 + exp(-g)) without overflow for large |g|.
double softplus_neg(double g) {
  if (g < -40.0) return -g;
  if (g > 40.0) return std::exp(-g);
  return std::log1p(std::exp(-g));
}

// d/dg log(1 + exp(-g)) = -1 / (1 + exp(g))
double softplus_neg_grad(double g) {
  if (g > 40.0) return -std::exp(-g);
  if (g < -40.0) return -1.0;
  return -1.0 / (1.0 + std::exp(g));
}

}  // namespace

double LossSpec::value(double margin) const {
  switch (kind) {
    case LossKind::logistic:
      return softplus_neg(margin);
    case LossKind::hinge:
      return margin < margin_target ? margin_target - margin : 0.0;
    case LossKind::smoothed_hinge:
      return temperature * softplus_neg(margin / temperature);
  }
  throw std::logic_error("unreachable loss kind");
}

double LossSpec::derivative(double margin) const {
  switch (kind) {
    case LossKind::logistic:
      return softplus_neg_grad(margin);
    case LossKind::hinge:
      return margin < margin_target ? -1.0 : 0.0;
    case LossKind::smoothed_hinge:
      return softplus_neg_grad(margin / temperature);
  }
  throw std::logic_error("unreachable loss kind");
}

LossSpec LossSpec::logistic() { return LossSpec{LossKind::logistic, 1.0, 0.1}; }

LossSpec LossSpec::hinge(double target) {
  if (target <= 0) throw std::invalid_argument("hinge: margin target must be positive");
  return LossSpec{LossKind::hinge, target, 0.1};
}

LossSpec LossSpec::smoothed(double temperature) {
  if (temperature <= 0) throw std::invalid_argument("smoothed loss: temperature must be positive");
  return LossSpec{LossKind::smoothed_hinge, 1.0, temperature};
}

}  // namespace locem
