#include "locem/synthetic.hpp"

#include "locem/rng.hpp"

#include <fstream>

namespace locem {

MixtureSpec sample_mixture_spec(std::uint32_t clusters, std::uint32_t dim, double mean_low,
                                double mean_high, std::uint64_t seed) {
  if (clusters == 0 || dim == 0)
    throw std::invalid_argument("mixture spec: clusters and dim must be positive");
  if (mean_low > mean_high) throw std::invalid_argument("mixture spec: empty mean range");
  MixtureSpec spec;
  spec.clusters = clusters;
  spec.dim = dim;
  spec.mean_low = mean_low;
  spec.mean_high = mean_high;
  spec.seed = seed;
  spec.means.resize(clusters, dim);
  spec.weights.resize(clusters, dim);
  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> box(mean_low, mean_high);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::uint32_t i = 0; i < clusters; ++i)
    for (std::uint32_t j = 0; j < dim; ++j) spec.means(i, j) = mean_low == mean_high ? mean_low : box(engine);
  for (std::uint32_t i = 0; i < clusters; ++i)
    for (std::uint32_t j = 0; j < dim; ++j) spec.weights(i, j) = gauss(engine);
  return spec;
}

SyntheticSample sample_dataset(const MixtureSpec& spec, std::uint32_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample dataset: n must be positive");
  if (spec.means.rows() != spec.clusters || spec.means.cols() != spec.dim ||
      spec.weights.rows() != spec.clusters || spec.weights.cols() != spec.dim)
    throw std::invalid_argument("sample dataset: spec matrices inconsistent with k, D");
  Matrix points(n, spec.dim);
  std::vector<std::uint32_t> labels(n);
  std::vector<std::uint32_t> cluster(n);
  auto engine = make_engine(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, spec.clusters - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t c = pick(engine);
    cluster[i] = c;
    for (std::uint32_t j = 0; j < spec.dim; ++j) points(i, j) = spec.means(c, j) + gauss(engine);
    const double side = spec.weights.row(c).dot(points.row(i) - spec.means.row(c));
    labels[i] = side >= 0.0 ? 1u : 0u;
  }
  return SyntheticSample{Dataset(std::move(points), std::move(labels), 2), std::move(cluster)};
}

void write_spec_sidecar(const MixtureSpec& spec, std::uint32_t n, std::uint64_t data_seed,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write spec sidecar: " + path);
  out << "clusters=" << spec.clusters << '\n'
      << "dim=" << spec.dim << '\n'
      << "mean_low=" << spec.mean_low << '\n'
      << "mean_high=" << spec.mean_high << '\n'
      << "spec_seed=" << spec.seed << '\n'
      << "n=" << n << '\n'
      << "data_seed=" << data_seed << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace locem
