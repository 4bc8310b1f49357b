#pragma once

#include "locem/common.hpp"
#include "locem/kernel.hpp"

#include <cstdint>
#include <variant>

namespace locem {

struct LinearScorer {
  Matrix weights;  // C x d
  Vector bias;     // C
};

/// Two-layer perceptron with tanh hidden units (1-Lipschitz, tanh(0)=0).
struct MlpScorer {
  Matrix w1;  // h x d
  Vector b1;  // h
  Matrix w2;  // C x h
  Vector b2;  // C
};

/// Kernel expansion over fixed anchors: f_c(x) = sum_j alpha(j,c) k(a_j, x).
struct KernelScorer {
  Matrix anchors;  // m x d
  Matrix alpha;    // m x C
  KernelSpec kernel;
};

/// Per-class score function f: X -> R^C. Immutable after construction.
class Scorer {
 public:
  using Variant = std::variant<LinearScorer, MlpScorer, KernelScorer>;

  explicit Scorer(Variant v);

  static Scorer zero_linear(std::uint32_t num_classes, std::uint32_t dim);

  Vector score(const Eigen::Ref<const Vector>& x) const;
  Matrix score_rows(const Eigen::Ref<const Matrix>& xs) const;  // n x C

  std::uint32_t num_classes() const { return num_classes_; }
  std::uint32_t input_dim() const { return input_dim_; }
  const Variant& variant() const { return v_; }

 private:
  Variant v_;
  std::uint32_t num_classes_ = 0;
  std::uint32_t input_dim_ = 0;
};

}  // namespace locem
