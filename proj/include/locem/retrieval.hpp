#pragma once

#include "locem/dataset.hpp"

#include <cstdint>
#include <vector>

namespace locem {

/// Result of a metric query: dataset row indices with their distances, sorted
/// by (distance, index) ascending. Indices are distinct.
struct RetrievedSet {
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

enum class IndexBackend : std::uint8_t { brute_force, vantage_point_tree };

/// Exact Euclidean index over a fixed point matrix. Immutable after build;
/// queries are safe to run concurrently. Both backends return identical
/// results; ties in distance resolve to the lower row index.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;

  static RetrievalIndex build(const Matrix& points,
                              IndexBackend backend = IndexBackend::vantage_point_tree);
  static RetrievalIndex build(const Dataset& data,
                              IndexBackend backend = IndexBackend::vantage_point_tree);

  /// Rows within `radius` of x. `exclude_row` (when >= 0) is never returned;
  /// use it to keep a training point from retrieving itself.
  RetrievedSet ball_query(const Eigen::Ref<const Vector>& x, double radius,
                          std::int64_t exclude_row = -1) const;

  /// The min(k, available) nearest rows.
  RetrievedSet knn_query(const Eigen::Ref<const Vector>& x, std::uint32_t k,
                         std::int64_t exclude_row = -1) const;

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  IndexBackend backend() const { return backend_; }

 private:
  struct Node {
    std::uint32_t point = 0;
    double threshold = 0.0;
    std::int32_t inner = -1;
    std::int32_t outer = -1;
  };

  std::int32_t build_node(std::vector<std::uint32_t>& items, std::size_t lo, std::size_t hi);
  double dist_to(const Eigen::Ref<const Vector>& x, std::uint32_t row) const;

  Matrix points_;
  IndexBackend backend_ = IndexBackend::brute_force;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

/// Empirical floor on retrieved-set size: the largest N with at most a delta
/// fraction of training points having fewer than N same-radius neighbors
/// (self-excluded). Estimated on the sample itself.
std::uint32_t estimate_retrieved_floor(const Dataset& data, const RetrievalIndex& index,
                                       double radius, double delta);

/// Self-excluded ball-neighbor counts per row, for histograms and diagnostics.
std::vector<std::uint32_t> neighbor_counts(const Dataset& data, const RetrievalIndex& index,
                                           double radius);

}  // namespace locem
