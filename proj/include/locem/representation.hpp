#pragma once

#include "locem/dataset.hpp"
#include "locem/loss.hpp"
#include "locem/train.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace locem {

enum class FeatureMapKind : std::uint8_t { identity, pca, linear_softmax_embedding };

struct FeatureMapSpec {
  FeatureMapKind kind = FeatureMapKind::identity;
  std::uint32_t components = 2;  // pca / embedding output dimension
  // embedding training knobs
  LossSpec loss;
  double l2 = 1e-4;
  OptConfig opt;

  static FeatureMapSpec identity();
  static FeatureMapSpec pca(std::uint32_t components);
  static FeatureMapSpec embedding(std::uint32_t components, std::uint64_t seed);
};

/// Learned global feature map. Immutable after fit.
///   identity   Phi(x) = x
///   pca        Phi(x) = basis (x - mean), orthonormal rows (1-Lipschitz)
///   embedding  Phi(x) = W x, W from a linear softmax classifier with the
///              output layer dropped
class FeatureMap {
 public:
  Vector map(const Eigen::Ref<const Vector>& x) const;
  Matrix map_rows(const Eigen::Ref<const Matrix>& xs) const;
  std::uint32_t output_dim(std::uint32_t input_dim) const;

  FeatureMapKind kind = FeatureMapKind::identity;
  Vector mean;   // pca
  Matrix basis;  // pca: components x d
  Matrix w;      // embedding: e x d
  bool reduced_rank = false;  // pca found fewer directions than requested

  void save(const std::string& path) const;
  static FeatureMap load(const std::string& path);
};

FeatureMap fit_representation(const Dataset& data, const FeatureMapSpec& spec);

/// Applies the map to every row; labels pass through.
Dataset map_dataset(const FeatureMap& map, const Dataset& data);

/// Representation shift caused by one explicit replacement: refits the map on
/// the modified sample and returns max over probes of |Phi_S(p) - Phi_S'(p)|_2.
double sensitivity_of_replacement(const Dataset& data, const FeatureMapSpec& spec,
                                  std::uint32_t row, const Vector& new_x, std::uint32_t new_y,
                                  const std::vector<Vector>& probes);

/// Randomized lower estimate of the map's replace-one sensitivity: max over
/// `trials` replacements (a uniformly chosen row perturbed by unit Gaussian
/// noise, label kept) of the probe-wise shift. A lower bound on the worst case.
double estimate_sensitivity(const Dataset& data, const FeatureMapSpec& spec,
                            const std::vector<Vector>& probes, std::uint32_t trials,
                            std::uint64_t seed);

}  // namespace locem
