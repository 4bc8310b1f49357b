#pragma once

#include "locem/dataset.hpp"
#include "locem/loss.hpp"
#include "locem/scorer.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace locem {

/// Margin of scorer f at (x, y): f_y(x) - max_{c != y} f_c(x).
/// Requires at least two classes and a valid label.
double margin(const Scorer& f, const Eigen::Ref<const Vector>& x, std::uint32_t y);
double margin_of_scores(const Eigen::Ref<const Vector>& scores, std::uint32_t y);

/// argmax over class scores; ties resolve to the lowest class index.
std::uint32_t argmax_lowest(const Eigen::Ref<const Vector>& scores);
std::uint32_t classify(const Scorer& f, const Eigen::Ref<const Vector>& x);

/// Mean margin loss over the dataset. Throws on an empty dataset.
double empirical_risk(const Scorer& f, const Dataset& data, const LossSpec& loss);

enum class FamilyKind : std::uint8_t { linear, mlp, kernel_machine };

struct FamilySpec {
  FamilyKind kind = FamilyKind::linear;
  std::uint32_t hidden = 16;  // mlp width
  KernelSpec kernel;          // kernel_machine

  static FamilySpec linear();
  static FamilySpec mlp(std::uint32_t hidden);
  static FamilySpec kernel_machine(const KernelSpec& k);
};

/// Full-batch gradient descent with Armijo backtracking. Deterministic given
/// the seed (used only for mlp / embedding initialization).
struct OptConfig {
  std::uint32_t max_iters = 200;
  double step = 1.0;
  double grad_tol = 1e-7;
  std::uint64_t seed = 0;
};

/// Minimizes obj (value + optional gradient) from theta by monotone descent.
/// Throws NumericError if the objective turns non-finite.
Vector gradient_descent(const std::function<double(const Vector&, Vector*)>& obj,
                        Vector theta, const OptConfig& opt);

/// Fits a scorer on an explicit point set. The returned scorer's empirical
/// risk never exceeds the zero scorer's (guarded against by construction).
Scorer fit_scorer(const Eigen::Ref<const Matrix>& xs, const std::vector<std::uint32_t>& ys,
                  std::uint32_t num_classes, const FamilySpec& family, const LossSpec& loss,
                  double l2, const OptConfig& opt);

/// Global ERM baseline. Requires n >= num_classes.
Scorer train_global(const Dataset& data, const FamilySpec& family, const LossSpec& loss,
                    double l2, const OptConfig& opt);

/// Mean 0/1 accuracy of argmax classification on the dataset.
double accuracy(const Scorer& f, const Dataset& data);

}  // namespace locem
