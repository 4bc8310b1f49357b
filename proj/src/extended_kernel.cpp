#include "locem/extended_kernel.hpp"

#include "locem/threading.hpp"
#include "locem/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace locem {

LabeledSet gather(const Dataset& data, const RetrievedSet& retrieved) {
  LabeledSet set;
  set.xs.resize(static_cast<Eigen::Index>(retrieved.size()), static_cast<Eigen::Index>(data.dim()));
  set.ys.resize(retrieved.size());
  for (std::size_t i = 0; i < retrieved.size(); ++i) {
    set.xs.row(static_cast<Eigen::Index>(i)) = data.points().row(retrieved.indices[i]);
    set.ys[i] = data.label(retrieved.indices[i]);
  }
  return set;
}

GroupedSet group_set(const LabeledSet& set) {
  GroupedSet g;
  g.total = set.size();
  std::map<std::uint32_t, std::vector<Eigen::Index>> by_label;
  for (std::size_t i = 0; i < set.ys.size(); ++i)
    by_label[set.ys[i]].push_back(static_cast<Eigen::Index>(i));
  for (const auto& [label, rows] : by_label) {
    Matrix block(rows.size(), set.xs.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) block.row(static_cast<Eigen::Index>(r)) = set.xs.row(rows[r]);
    g.labels.push_back(label);
    g.sq_norms.push_back(block.rowwise().squaredNorm());
    g.blocks.push_back(std::move(block));
  }
  return g;
}

namespace {

// Sum of the feature kernel over all cross pairs of two same-label blocks.
double block_kernel_sum(const Matrix& a, const Vector& a_sq, const Matrix& b, const Vector& b_sq,
                        const KernelSpec& kz) {
  switch (kz.kind) {
    case KernelSpec::Kind::gaussian: {
      Matrix cross = a * b.transpose();
      const double inv = -1.0 / (2.0 * kz.bandwidth * kz.bandwidth);
      cross = (((-2.0 * cross).colwise() + a_sq).rowwise() + b_sq.transpose()) * inv;
      return cross.array().exp().sum();
    }
    case KernelSpec::Kind::linear:
      // sum_ij a_i . b_j factorizes through the block sums
      return a.colwise().sum().dot(b.colwise().sum());
    case KernelSpec::Kind::polynomial: {
      Matrix cross = a * b.transpose();
      return (cross.array() + kz.offset).pow(kz.degree).sum();
    }
  }
  throw std::logic_error("unreachable kernel kind");
}

}  // namespace

double embedding_inner_grouped(const GroupedSet& a, const GroupedSet& b, const KernelSpec& kz) {
  if (a.total == 0 || b.total == 0) throw std::domain_error("embedding inner: empty set");
  double total = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.labels.size() && ib < b.labels.size()) {
    if (a.labels[ia] < b.labels[ib]) {
      ++ia;
    } else if (a.labels[ia] > b.labels[ib]) {
      ++ib;
    } else {
      total += block_kernel_sum(a.blocks[ia], a.sq_norms[ia], b.blocks[ib], b.sq_norms[ib], kz);
      ++ia;
      ++ib;
    }
  }
  return total / (static_cast<double>(a.total) * static_cast<double>(b.total));
}

double embedding_inner(const LabeledSet& a, const LabeledSet& b, const KernelSpec& kz) {
  return embedding_inner_grouped(group_set(a), group_set(b), kz);
}

double embedding_sq_dist(const LabeledSet& a, const LabeledSet& b, const KernelSpec& kz) {
  const double d =
      embedding_inner(a, a, kz) + embedding_inner(b, b, kz) - 2.0 * embedding_inner(a, b, kz);
  return std::max(d, 0.0);
}

double kappa_value(const KernelSpec& kappa, double inner_aa, double inner_bb, double inner_ab) {
  if (kappa.kind == KernelSpec::Kind::gaussian)
    return kappa.from_sq_dist(std::max(inner_aa + inner_bb - 2.0 * inner_ab, 0.0));
  return kappa.from_inner(inner_ab);
}

double extended_kernel(const ExtendedPoint& p, const ExtendedPoint& q,
                       const ExtendedKernelSpecs& specs, const Dataset& train) {
  if (p.retrieved.empty() || q.retrieved.empty())
    throw std::domain_error("extended kernel: empty retrieved set");
  GroupedSet a = group_set(gather(train, p.retrieved));
  GroupedSet b = group_set(gather(train, q.retrieved));
  const double aa = embedding_inner_grouped(a, a, specs.kz);
  const double bb = embedding_inner_grouped(b, b, specs.kz);
  const double ab = embedding_inner_grouped(a, b, specs.kz);
  return specs.kx(p.x, q.x) * kappa_value(specs.kappa, aa, bb, ab);
}

namespace {

std::uint64_t fnv64(std::uint64_t h, const void* p, std::size_t len) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t specs_digest(const ExtendedKernelSpecs& specs, double radius) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix_kernel = [&h](const KernelSpec& k) {
    const auto kind = static_cast<std::uint8_t>(k.kind);
    h = fnv64(h, &kind, sizeof kind);
    h = fnv64(h, &k.bandwidth, sizeof k.bandwidth);
    h = fnv64(h, &k.degree, sizeof k.degree);
    h = fnv64(h, &k.offset, sizeof k.offset);
  };
  mix_kernel(specs.kx);
  mix_kernel(specs.kz);
  mix_kernel(specs.kappa);
  h = fnv64(h, &radius, sizeof radius);
  return h;
}

constexpr char kGramMagic[4] = {'L', 'G', 'C', '1'};

std::string cache_path(const std::string& dir, std::uint64_t data_hash, std::uint64_t digest) {
  std::ostringstream name;
  name << dir << "/gram_" << std::hex << data_hash << '_' << digest << ".lgc";
  return name.str();
}

bool load_gram_cache(const std::string& path, std::uint32_t n, std::uint64_t data_hash,
                     std::uint64_t digest, Matrix& kernel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kGramMagic, 4) != 0) return false;
  std::uint32_t file_n = 0;
  std::uint64_t file_hash = 0, file_digest = 0;
  in.read(reinterpret_cast<char*>(&file_n), sizeof file_n);
  in.read(reinterpret_cast<char*>(&file_hash), sizeof file_hash);
  in.read(reinterpret_cast<char*>(&file_digest), sizeof file_digest);
  if (!in || file_n != n || file_hash != data_hash || file_digest != digest) return false;
  kernel.resize(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i; j < n; ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      if (!in) return false;
      kernel(i, j) = v;
      kernel(j, i) = v;
    }
  return true;
}

void save_gram_cache(const std::string& path, std::uint32_t n, std::uint64_t data_hash,
                     std::uint64_t digest, const Matrix& kernel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return;  // cache writes are best effort
  out.write(kGramMagic, 4);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&data_hash), sizeof data_hash);
  out.write(reinterpret_cast<const char*>(&digest), sizeof digest);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i; j < n; ++j)
      out.write(reinterpret_cast<const char*>(&kernel(i, j)), sizeof(double));
}

RetrievedSet retrieve_nonempty(const RetrievalIndex& index, const Eigen::Ref<const Vector>& x,
                               double radius, std::int64_t exclude_row) {
  RetrievedSet set = index.ball_query(x, radius, exclude_row);
  if (!set.empty()) return set;
  set = index.knn_query(x, 1, exclude_row);
  if (!set.empty()) return set;
  return index.knn_query(x, 1);  // single-point dataset keeps itself
}

}  // namespace

ExtendedGram build_extended_gram(const Dataset& train, const RetrievalIndex& index, double radius,
                                 const ExtendedKernelSpecs& specs, const std::string& cache_dir) {
  if (train.size() == 0) throw std::domain_error("extended gram: empty dataset");
  if (radius < 0) throw std::domain_error("extended gram: radius must be nonnegative");
  const std::uint32_t n = static_cast<std::uint32_t>(train.size());
  ExtendedGram gram;
  gram.specs = specs;
  gram.radius = radius;
  gram.points.resize(n);
  gram.grouped.resize(n);
  parallel_for(n, [&](std::size_t i) {
    ExtendedPoint& p = gram.points[i];
    p.x = train.point(i);
    p.retrieved = retrieve_nonempty(index, p.x, radius, static_cast<std::int64_t>(i));
    gram.grouped[i] = group_set(gather(train, p.retrieved));
  });
  gram.self_inners.resize(n);
  parallel_for(n, [&](std::size_t i) {
    gram.self_inners(static_cast<Eigen::Index>(i)) =
        embedding_inner_grouped(gram.grouped[i], gram.grouped[i], specs.kz);
  });

  const std::uint64_t digest = specs_digest(specs, radius);
  std::uint64_t data_hash = 0;
  std::string file;
  if (!cache_dir.empty()) {
    data_hash = dataset_hash(train);
    file = cache_path(cache_dir, data_hash, digest);
    if (load_gram_cache(file, n, data_hash, digest, gram.kernel)) return gram;
  }

  gram.embedding_inners.resize(n, n);
  gram.kernel.resize(n, n);
  parallel_for(n, [&](std::size_t i) {
    const Eigen::Index ei = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const Eigen::Index ej = static_cast<Eigen::Index>(j);
      const double inner =
          i == j ? gram.self_inners(ei)
                 : embedding_inner_grouped(gram.grouped[i], gram.grouped[j], specs.kz);
      gram.embedding_inners(ei, ej) = inner;
      gram.embedding_inners(ej, ei) = inner;
      const double k = specs.kx(gram.points[i].x, gram.points[j].x) *
                       kappa_value(specs.kappa, gram.self_inners(ei), gram.self_inners(ej), inner);
      gram.kernel(ei, ej) = k;
      gram.kernel(ej, ei) = k;
    }
  });

  if (!file.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    save_gram_cache(file, n, data_hash, digest, gram.kernel);
  }
  return gram;
}

ExtendedKernelModel train_extended(const ExtendedGram& gram,
                                   const std::vector<std::uint32_t>& labels,
                                   std::uint32_t num_classes, double lambda) {
  if (lambda <= 0) throw std::invalid_argument("extended train: lambda must be positive");
  const Eigen::Index n = gram.kernel.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size())
    throw std::invalid_argument("extended train: label count does not match gram size");
  if (num_classes == 0) throw std::invalid_argument("extended train: need at least one class");
  Matrix targets = Matrix::Constant(n, num_classes, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] >= num_classes)
      throw std::invalid_argument("extended train: label out of range");
    targets(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  Matrix system = gram.kernel;
  system.diagonal().array() += static_cast<double>(n) * lambda;
  Eigen::LDLT<Matrix> ldlt(system);
  Matrix alpha;
  if (ldlt.info() == Eigen::Success) alpha = ldlt.solve(targets);
  if (ldlt.info() != Eigen::Success || !alpha.allFinite()) {
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    const double dmin = ldlt.vectorD().cwiseAbs().minCoeff();
    throw NumericError("extended train: ridge solve failed, condition estimate " +
                       std::to_string(dmin > 0 ? dmax / dmin : std::numeric_limits<double>::infinity()));
  }
  ExtendedKernelModel model;
  model.specs = gram.specs;
  model.lambda = lambda;
  model.radius = gram.radius;
  model.alpha = std::move(alpha);
  model.num_classes = num_classes;
  model.train_xs.resize(n, gram.points.front().x.size());
  for (Eigen::Index i = 0; i < n; ++i) model.train_xs.row(i) = gram.points[static_cast<std::size_t>(i)].x.transpose();
  model.train_sets = gram.grouped;
  model.self_inners = gram.self_inners;
  return model;
}

std::pair<std::uint32_t, Vector> predict_extended(const ExtendedKernelModel& model,
                                                  const Eigen::Ref<const Vector>& x,
                                                  const RetrievalIndex& index,
                                                  const Dataset& train,
                                                  std::int64_t exclude_row) {
  const Eigen::Index n = model.alpha.rows();
  RetrievedSet retrieved = retrieve_nonempty(index, x, model.radius, exclude_row);
  GroupedSet q = group_set(gather(train, retrieved));
  const double qq = embedding_inner_grouped(q, q, model.specs.kz);
  Vector kvec(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double qi = embedding_inner_grouped(q, model.train_sets[static_cast<std::size_t>(i)],
                                              model.specs.kz);
    kvec(i) = model.specs.kx(x, model.train_xs.row(i).transpose()) *
              kappa_value(model.specs.kappa, qq, model.self_inners(i), qi);
  }
  Vector scores = model.alpha.transpose() * kvec;
  return {argmax_lowest(scores), std::move(scores)};
}

}  // namespace locem
