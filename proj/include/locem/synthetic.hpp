#pragma once

#include "locem/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace locem {

/// Gaussian mixture with a linear decision boundary per cluster: the canonical
/// locally-regular benchmark. Within one cluster the Bayes rule is linear.
struct MixtureSpec {
  std::uint32_t clusters = 100;
  std::uint32_t dim = 10;
  double mean_low = -10.0;
  double mean_high = 10.0;
  std::uint64_t seed = 0;
  Matrix means;    // k x D, uniform over [mean_low, mean_high]
  Matrix weights;  // k x D, standard normal
};

MixtureSpec sample_mixture_spec(std::uint32_t clusters, std::uint32_t dim, double mean_low,
                                double mean_high, std::uint64_t seed);

struct SyntheticSample {
  Dataset data;  // binary labels: 1 iff w_i . (x - mu_i) >= 0
  std::vector<std::uint32_t> cluster;
};

/// Per example: cluster uniform, x ~ N(mu_i, I), label from the cluster's
/// hyperplane (sign(0) maps to label 1). Bit-identical for the same inputs.
SyntheticSample sample_dataset(const MixtureSpec& spec, std::uint32_t n, std::uint64_t seed);

/// Text sidecar (key=value) recording the generator parameters.
void write_spec_sidecar(const MixtureSpec& spec, std::uint32_t n, std::uint64_t data_seed,
                        const std::string& path);

}  // namespace locem
