#pragma once

#include "locem/dataset.hpp"
#include "locem/kernel.hpp"
#include "locem/retrieval.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace locem {

/// Labeled point list backing an empirical local distribution.
struct LabeledSet {
  Matrix xs;  // m x d
  std::vector<std::uint32_t> ys;

  std::size_t size() const { return ys.size(); }
};

LabeledSet gather(const Dataset& data, const RetrievedSet& retrieved);

/// Kernels of the extended feature space. k_Z acts on labeled points as the
/// feature kernel times a label-indicator factor (a valid PSD kernel on X x Y);
/// kappa acts on mean embeddings: gaussian through the embedding distance,
/// linear/polynomial through the embedding inner product. All PSD, so the
/// extended Gram is PSD.
struct ExtendedKernelSpecs {
  KernelSpec kx = KernelSpec::gaussian(1.0);
  KernelSpec kz = KernelSpec::gaussian(1.0);
  KernelSpec kappa = KernelSpec::gaussian(1.0);
};

/// <Psi(A), Psi(B)}: exact double sum (1/(m_a m_b)) sum_ij k_Z(z_i, z'_j).
double embedding_inner(const LabeledSet& a, const LabeledSet& b, const KernelSpec& kz);

/// |Psi(A) - Psi(B)|^2 via the Gram expansion, clamped at 0 against roundoff.
double embedding_sq_dist(const LabeledSet& a, const LabeledSet& b, const KernelSpec& kz);

/// kappa evaluated from cached embedding cross terms.
double kappa_value(const KernelSpec& kappa, double inner_aa, double inner_bb, double inner_ab);

/// Extended point: an instance paired with its retrieved neighborhood.
struct ExtendedPoint {
  Vector x;
  RetrievedSet retrieved;  // nonempty
};

/// Product kernel on extended points: k_X(x1,x2) * kappa(Psi(D1), Psi(D2)).
double extended_kernel(const ExtendedPoint& p, const ExtendedPoint& q,
                       const ExtendedKernelSpecs& specs, const Dataset& train);

/// Retrieved set with rows grouped by label; the block layout turns the
/// embedding double sums into dense matrix products.
struct GroupedSet {
  std::vector<std::uint32_t> labels;  // distinct labels present, ascending
  std::vector<Matrix> blocks;         // rows with that label
  std::vector<Vector> sq_norms;       // rowwise squared norms per block
  std::size_t total = 0;
};

GroupedSet group_set(const LabeledSet& set);
double embedding_inner_grouped(const GroupedSet& a, const GroupedSet& b, const KernelSpec& kz);

struct ExtendedGram {
  Matrix kernel;            // n x n, symmetric
  Matrix embedding_inners;  // n x n cache of <Psi_i, Psi_j>; empty on a cache hit
  Vector self_inners;       // <Psi_i, Psi_i>, always populated
  ExtendedKernelSpecs specs;
  double radius = 0.0;
  std::vector<ExtendedPoint> points;
  std::vector<GroupedSet> grouped;
};

/// Retrieved sets are self-excluded balls with a 1-NN fallback so every set is
/// nonempty (a lone point keeps itself). With cache_dir nonempty, the kernel
/// matrix is persisted keyed by (dataset hash, radius, specs).
ExtendedGram build_extended_gram(const Dataset& train, const RetrievalIndex& index, double radius,
                                 const ExtendedKernelSpecs& specs,
                                 const std::string& cache_dir = "");

struct ExtendedKernelModel {
  ExtendedKernelSpecs specs;
  double lambda = 0.0;
  double radius = 0.0;
  Matrix alpha;  // n x C
  Matrix train_xs;
  std::vector<GroupedSet> train_sets;
  Vector self_inners;  // <Psi_i, Psi_i> per training point
  std::uint32_t num_classes = 0;
};

/// One-vs-all kernel ridge with +-1 targets: solves (K + n lambda I) a_y = t_y.
ExtendedKernelModel train_extended(const ExtendedGram& gram,
                                   const std::vector<std::uint32_t>& labels,
                                   std::uint32_t num_classes, double lambda);

/// Scores a query by the representer sum over training extended points.
/// exclude_row replicates training-time self-exclusion for train-set queries.
std::pair<std::uint32_t, Vector> predict_extended(const ExtendedKernelModel& model,
                                                  const Eigen::Ref<const Vector>& x,
                                                  const RetrievalIndex& index,
                                                  const Dataset& train,
                                                  std::int64_t exclude_row = -1);

}  // namespace locem
