#pragma once

#include "locem/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace locem {

/// Labeled sample: n points in d-dimensional space, labels in [0, num_classes).
/// Immutable after construction and safe to share across threads.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix points, std::vector<std::uint32_t> labels, std::uint32_t num_classes);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  std::uint32_t num_classes() const { return num_classes_; }

  const Matrix& points() const { return points_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  Eigen::Ref<const Vector> point(std::size_t i) const { return points_.row(i).transpose(); }

  Dataset subset(const std::vector<std::uint32_t>& rows) const;

 private:
  Matrix points_;
  std::vector<std::uint32_t> labels_;
  std::uint32_t num_classes_ = 0;
};

// CSV: d feature columns then one integer label column; header optional on read,
// written on save. Binary (little-endian): u32 n, u32 d, u32 num_classes,
// n*d f64 features row-major, n u32 labels.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path);
Dataset load_dataset_binary(const std::string& path);
void save_dataset_binary(const Dataset& data, const std::string& path);

/// Dispatches on extension: ".bin" loads binary, anything else CSV.
Dataset load_dataset(const std::string& path);

/// FNV-1a over the raw feature/label bytes; used as a cache key component.
std::uint64_t dataset_hash(const Dataset& data);

}  // namespace locem
