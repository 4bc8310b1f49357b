#include "locem/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace locem {

namespace {

struct Candidate {
  double dist;
  std::uint32_t row;
  bool operator<(const Candidate& o) const {  // lexicographic: worse = greater
    return dist != o.dist ? dist < o.dist : row < o.row;
  }
};

void sort_retrieved(std::vector<Candidate>& cands, RetrievedSet& out) {
  std::sort(cands.begin(), cands.end());
  out.indices.reserve(cands.size());
  out.distances.reserve(cands.size());
  for (const auto& c : cands) {
    out.indices.push_back(c.row);
    out.distances.push_back(c.dist);
  }
}

}  // namespace

RetrievalIndex RetrievalIndex::build(const Matrix& points, IndexBackend backend) {
  if (!points.allFinite()) throw std::invalid_argument("index build: non-finite feature value");
  RetrievalIndex idx;
  idx.points_ = points;
  idx.backend_ = backend;
  if (backend == IndexBackend::vantage_point_tree && points.rows() > 0) {
    std::vector<std::uint32_t> items(static_cast<std::size_t>(points.rows()));
    std::iota(items.begin(), items.end(), 0u);
    idx.nodes_.reserve(items.size());
    idx.root_ = idx.build_node(items, 0, items.size());
  }
  return idx;
}

RetrievalIndex RetrievalIndex::build(const Dataset& data, IndexBackend backend) {
  return build(data.points(), backend);
}

double RetrievalIndex::dist_to(const Eigen::Ref<const Vector>& x, std::uint32_t row) const {
  return std::sqrt((points_.row(row).transpose() - x).squaredNorm());
}

std::int32_t RetrievalIndex::build_node(std::vector<std::uint32_t>& items, std::size_t lo,
                                        std::size_t hi) {
  if (lo >= hi) return -1;
  const std::uint32_t vantage = items[lo];
  Node node;
  node.point = vantage;
  const std::size_t rest_lo = lo + 1;
  if (rest_lo >= hi) {
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }
  // Split the remainder at the median distance to the vantage point. Inner
  // children end up with distance <= threshold, outer with >= threshold.
  std::vector<Candidate> rest;
  rest.reserve(hi - rest_lo);
  for (std::size_t i = rest_lo; i < hi; ++i)
    rest.push_back({dist_to(points_.row(vantage).transpose(), items[i]), items[i]});
  const std::size_t mid = (rest.size() - 1) / 2;
  std::nth_element(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(mid), rest.end());
  node.threshold = rest[mid].dist;
  for (std::size_t i = 0; i < rest.size(); ++i) items[rest_lo + i] = rest[i].row;
  const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  const std::int32_t inner = build_node(items, rest_lo, rest_lo + mid + 1);
  const std::int32_t outer = build_node(items, rest_lo + mid + 1, hi);
  nodes_[static_cast<std::size_t>(self)].inner = inner;
  nodes_[static_cast<std::size_t>(self)].outer = outer;
  return self;
}

RetrievedSet RetrievalIndex::ball_query(const Eigen::Ref<const Vector>& x, double radius,
                                        std::int64_t exclude_row) const {
  if (radius < 0) throw std::domain_error("ball query: radius must be nonnegative");
  if (points_.rows() > 0 && x.size() != points_.cols())
    throw std::invalid_argument("ball query: dimension mismatch");
  std::vector<Candidate> cands;
  if (backend_ == IndexBackend::brute_force || root_ < 0) {
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      if (i == exclude_row) continue;
      const double d = dist_to(x, static_cast<std::uint32_t>(i));
      if (d <= radius) cands.push_back({d, static_cast<std::uint32_t>(i)});
    }
  } else {
    std::vector<std::int32_t> stack{root_};
    while (!stack.empty()) {
      const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      const double d = dist_to(x, node.point);
      if (d <= radius && static_cast<std::int64_t>(node.point) != exclude_row)
        cands.push_back({d, node.point});
      if (node.inner >= 0 && d - radius <= node.threshold) stack.push_back(node.inner);
      if (node.outer >= 0 && d + radius >= node.threshold) stack.push_back(node.outer);
    }
  }
  RetrievedSet out;
  sort_retrieved(cands, out);
  return out;
}

RetrievedSet RetrievalIndex::knn_query(const Eigen::Ref<const Vector>& x, std::uint32_t k,
                                       std::int64_t exclude_row) const {
  if (k == 0) throw std::domain_error("knn query: k must be positive");
  if (points_.rows() > 0 && x.size() != points_.cols())
    throw std::invalid_argument("knn query: dimension mismatch");
  std::priority_queue<Candidate> heap;  // top = current worst of the best k
  auto offer = [&](double d, std::uint32_t row) {
    if (heap.size() < k) {
      heap.push({d, row});
    } else if (Candidate{d, row} < heap.top()) {
      heap.pop();
      heap.push({d, row});
    }
  };
  if (backend_ == IndexBackend::brute_force || root_ < 0) {
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      if (i == exclude_row) continue;
      offer(dist_to(x, static_cast<std::uint32_t>(i)), static_cast<std::uint32_t>(i));
    }
  } else {
    // tau bounds by distance only; subtrees at exactly tau must still be
    // visited because an equal-distance lower-index row can beat a heap entry.
    auto tau = [&] {
      return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().dist;
    };
    struct Frame {
      std::int32_t node;
      double bound;  // lower bound on any distance inside this subtree
    };
    std::vector<Frame> stack{{root_, 0.0}};
    while (!stack.empty()) {
      const Frame frame = stack.back();
      stack.pop_back();
      if (frame.bound > tau()) continue;
      const Node& node = nodes_[static_cast<std::size_t>(frame.node)];
      const double d = dist_to(x, node.point);
      if (static_cast<std::int64_t>(node.point) != exclude_row) offer(d, node.point);
      const double inner_bound = std::max(0.0, d - node.threshold);
      const double outer_bound = std::max(0.0, node.threshold - d);
      // far side first so the near side is explored first and shrinks tau
      if (d <= node.threshold) {
        if (node.outer >= 0 && outer_bound <= tau()) stack.push_back({node.outer, outer_bound});
        if (node.inner >= 0 && inner_bound <= tau()) stack.push_back({node.inner, inner_bound});
      } else {
        if (node.inner >= 0 && inner_bound <= tau()) stack.push_back({node.inner, inner_bound});
        if (node.outer >= 0 && outer_bound <= tau()) stack.push_back({node.outer, outer_bound});
      }
    }
  }
  std::vector<Candidate> cands;
  cands.reserve(heap.size());
  while (!heap.empty()) {
    cands.push_back(heap.top());
    heap.pop();
  }
  RetrievedSet out;
  sort_retrieved(cands, out);
  return out;
}

std::vector<std::uint32_t> neighbor_counts(const Dataset& data, const RetrievalIndex& index,
                                           double radius) {
  std::vector<std::uint32_t> counts(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    counts[i] = static_cast<std::uint32_t>(
        index.ball_query(data.point(i), radius, static_cast<std::int64_t>(i)).size());
  return counts;
}

std::uint32_t estimate_retrieved_floor(const Dataset& data, const RetrievalIndex& index,
                                       double radius, double delta) {
  if (data.size() == 0) throw std::domain_error("retrieved floor: empty dataset");
  if (delta <= 0 || delta >= 1) throw std::domain_error("retrieved floor: delta must be in (0,1)");
  std::vector<std::uint32_t> counts = neighbor_counts(data, index, radius);
  std::sort(counts.begin(), counts.end());
  std::size_t pos = static_cast<std::size_t>(delta * static_cast<double>(counts.size()));
  if (pos >= counts.size()) pos = counts.size() - 1;
  return counts[pos];
}

}  // namespace locem
