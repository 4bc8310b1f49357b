#include "locem/representation.hpp"

#include "locem/rng.hpp"
#include "locem/threading.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstring>
#include <fstream>

namespace locem {

FeatureMapSpec FeatureMapSpec::identity() { return FeatureMapSpec{}; }

FeatureMapSpec FeatureMapSpec::pca(std::uint32_t components) {
  if (components == 0) throw std::invalid_argument("pca: components must be positive");
  FeatureMapSpec s;
  s.kind = FeatureMapKind::pca;
  s.components = components;
  return s;
}

FeatureMapSpec FeatureMapSpec::embedding(std::uint32_t components, std::uint64_t seed) {
  if (components == 0) throw std::invalid_argument("embedding: components must be positive");
  FeatureMapSpec s;
  s.kind = FeatureMapKind::linear_softmax_embedding;
  s.components = components;
  s.opt.seed = seed;
  return s;
}

Vector FeatureMap::map(const Eigen::Ref<const Vector>& x) const {
  switch (kind) {
    case FeatureMapKind::identity:
      return x;
    case FeatureMapKind::pca:
      return basis * (x - mean);
    case FeatureMapKind::linear_softmax_embedding:
      return w * x;
  }
  throw std::logic_error("unreachable feature map kind");
}

Matrix FeatureMap::map_rows(const Eigen::Ref<const Matrix>& xs) const {
  switch (kind) {
    case FeatureMapKind::identity:
      return xs;
    case FeatureMapKind::pca:
      return (xs.rowwise() - mean.transpose()) * basis.transpose();
    case FeatureMapKind::linear_softmax_embedding:
      return xs * w.transpose();
  }
  throw std::logic_error("unreachable feature map kind");
}

std::uint32_t FeatureMap::output_dim(std::uint32_t input_dim) const {
  switch (kind) {
    case FeatureMapKind::identity:
      return input_dim;
    case FeatureMapKind::pca:
      return static_cast<std::uint32_t>(basis.rows());
    case FeatureMapKind::linear_softmax_embedding:
      return static_cast<std::uint32_t>(w.rows());
  }
  throw std::logic_error("unreachable feature map kind");
}

namespace {

FeatureMap fit_pca(const Dataset& data, std::uint32_t components) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = static_cast<Eigen::Index>(data.dim());
  if (n < static_cast<Eigen::Index>(components))
    throw std::invalid_argument("pca: need at least `components` samples");
  FeatureMap fm;
  fm.kind = FeatureMapKind::pca;
  fm.mean = data.points().colwise().mean().transpose();
  Matrix centered = data.points().rowwise() - fm.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca: eigendecomposition failed");
  // eigenvalues ascending; take the top `components` above the rank tolerance
  const double max_eig = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  const double tol = 1e-12 * std::max(max_eig, 1.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = d - 1; c >= 0 && keep.size() < components; --c) {
    if (eig.eigenvalues()(c) > tol) keep.push_back(c);
  }
  fm.reduced_rank = keep.size() < components;
  fm.basis.resize(static_cast<Eigen::Index>(keep.size()), d);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    Vector v = eig.eigenvectors().col(keep[r]);
    // sign convention: the largest-magnitude coordinate is positive
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < d; ++j)
      if (std::abs(v(j)) > std::abs(v(pivot))) pivot = j;
    if (v(pivot) < 0) v = -v;
    fm.basis.row(static_cast<Eigen::Index>(r)) = v.transpose();
  }
  if (fm.basis.rows() == 0) {
    // degenerate data (all rows identical): fall back to a single axis
    fm.basis = Matrix::Zero(1, d);
    fm.basis(0, 0) = 1.0;
    fm.reduced_rank = true;
  }
  return fm;
}

FeatureMap fit_embedding(const Dataset& data, const FeatureMapSpec& spec) {
  const Eigen::Index d = static_cast<Eigen::Index>(data.dim());
  const Eigen::Index e = static_cast<Eigen::Index>(spec.components);
  const Eigen::Index classes = static_cast<Eigen::Index>(data.num_classes());
  const Matrix& xs = data.points();
  const auto& ys = data.labels();
  // theta = [W (e x d) | V (classes x e) | b (classes)]; scores = V W x + b.
  const Eigen::Index size = e * d + classes * e + classes;
  auto w_of = [&](const Vector& t) { return Eigen::Map<const Matrix>(t.data(), e, d); };
  auto v_of = [&](const Vector& t) { return Eigen::Map<const Matrix>(t.data() + e * d, classes, e); };
  auto b_of = [&](const Vector& t) {
    return Eigen::Map<const Vector>(t.data() + e * d + classes * e, classes);
  };
  const LossSpec loss = spec.loss;
  auto obj = [&](const Vector& t, Vector* grad) -> double {
    Matrix h = xs * w_of(t).transpose();                                   // n x e
    Matrix scores = (h * v_of(t).transpose()).rowwise() + b_of(t).transpose();  // n x C
    const double inv_n = 1.0 / static_cast<double>(xs.rows());
    double val = 0.0;
    Matrix d_scores = Matrix::Zero(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      const std::uint32_t y = ys[static_cast<std::size_t>(i)];
      Eigen::Index rival = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        if (static_cast<std::uint32_t>(c) == y) continue;
        if (scores(i, c) > best) {
          best = scores(i, c);
          rival = c;
        }
      }
      const double g = scores(i, y) - best;
      val += loss.value(g);
      const double dl = loss.derivative(g) * inv_n;
      d_scores(i, y) += dl;
      d_scores(i, rival) -= dl;
    }
    val = val * inv_n + spec.l2 * (w_of(t).squaredNorm() + v_of(t).squaredNorm());
    if (grad) {
      grad->resize(size);
      Matrix d_h = d_scores * v_of(t);
      Eigen::Map<Matrix>(grad->data(), e, d) = d_h.transpose() * xs + 2.0 * spec.l2 * w_of(t);
      Eigen::Map<Matrix>(grad->data() + e * d, classes, e) =
          d_scores.transpose() * h + 2.0 * spec.l2 * v_of(t);
      Eigen::Map<Vector>(grad->data() + e * d + classes * e, classes) =
          d_scores.colwise().sum().transpose();
    }
    return val;
  };
  Vector theta = Vector::Zero(size);
  auto engine = make_engine(derive_seed(spec.opt.seed, 0x656d62u));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  for (Eigen::Index i = 0; i < e * d; ++i) theta(i) = gauss(engine);
  if (classes >= 2) theta = gradient_descent(obj, std::move(theta), spec.opt);
  FeatureMap fm;
  fm.kind = FeatureMapKind::linear_softmax_embedding;
  fm.w = w_of(theta);
  return fm;
}

}  // namespace

FeatureMap fit_representation(const Dataset& data, const FeatureMapSpec& spec) {
  switch (spec.kind) {
    case FeatureMapKind::identity:
      return FeatureMap{};
    case FeatureMapKind::pca:
      return fit_pca(data, spec.components);
    case FeatureMapKind::linear_softmax_embedding:
      return fit_embedding(data, spec);
  }
  throw std::logic_error("unreachable feature map kind");
}

Dataset map_dataset(const FeatureMap& map, const Dataset& data) {
  return Dataset(map.map_rows(data.points()), data.labels(), data.num_classes());
}

double sensitivity_of_replacement(const Dataset& data, const FeatureMapSpec& spec,
                                  std::uint32_t row, const Vector& new_x, std::uint32_t new_y,
                                  const std::vector<Vector>& probes) {
  if (row >= data.size()) throw std::invalid_argument("sensitivity: row out of range");
  if (new_x.size() != static_cast<Eigen::Index>(data.dim()))
    throw std::invalid_argument("sensitivity: replacement dimension mismatch");
  FeatureMap base = fit_representation(data, spec);
  Matrix pts = data.points();
  std::vector<std::uint32_t> labs = data.labels();
  pts.row(row) = new_x.transpose();
  labs[row] = new_y;
  Dataset modified(std::move(pts), std::move(labs), data.num_classes());
  FeatureMap alt = fit_representation(modified, spec);
  double worst = 0.0;
  for (const auto& p : probes) {
    Vector a = base.map(p);
    Vector b = alt.map(p);
    // a reduced-rank refit can change the output dimension; compare on the
    // common prefix and count the remainder as pure shift
    const Eigen::Index common = std::min(a.size(), b.size());
    double sq = (a.head(common) - b.head(common)).squaredNorm();
    if (a.size() > common) sq += a.tail(a.size() - common).squaredNorm();
    if (b.size() > common) sq += b.tail(b.size() - common).squaredNorm();
    worst = std::max(worst, std::sqrt(sq));
  }
  return worst;
}

double estimate_sensitivity(const Dataset& data, const FeatureMapSpec& spec,
                            const std::vector<Vector>& probes, std::uint32_t trials,
                            std::uint64_t seed) {
  if (data.size() < 2) throw std::invalid_argument("sensitivity: need at least two examples");
  if (trials == 0) throw std::invalid_argument("sensitivity: trials must be positive");
  if (spec.kind == FeatureMapKind::identity) return 0.0;  // the map ignores the sample
  std::vector<double> shifts(trials, 0.0);
  parallel_for(trials, [&](std::size_t t) {
    auto engine = make_engine(derive_seed(seed, 0x73656e73u, t));
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(data.size()) - 1);
    const std::uint32_t row = pick(engine);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector fresh = data.point(row);
    for (Eigen::Index j = 0; j < fresh.size(); ++j) fresh(j) += gauss(engine);
    shifts[t] = sensitivity_of_replacement(data, spec, row, fresh, data.label(row), probes);
  });
  double worst = 0.0;
  for (double s : shifts) worst = std::max(worst, s);
  return worst;
}

namespace {

constexpr char kMapMagic[4] = {'L', 'F', 'M', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("feature map file: truncated");
  return v;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
  put(out, static_cast<std::uint32_t>(m.rows()));
  put(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
}

Matrix get_matrix(std::ifstream& in) {
  auto r = get<std::uint32_t>(in);
  auto c = get<std::uint32_t>(in);
  Matrix m(r, c);
  for (std::uint32_t i = 0; i < r; ++i)
    for (std::uint32_t j = 0; j < c; ++j) m(i, j) = get<double>(in);
  return m;
}

}  // namespace

void FeatureMap::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature map: " + path);
  out.write(kMapMagic, 4);
  put(out, static_cast<std::uint8_t>(kind));
  put(out, static_cast<std::uint8_t>(reduced_rank ? 1 : 0));
  put_matrix(out, Matrix(mean.transpose()));
  put_matrix(out, basis);
  put_matrix(out, w);
  if (!out) throw IoError("write failed: " + path);
}

FeatureMap FeatureMap::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature map: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMapMagic, 4) != 0)
    throw IoError("feature map file: bad magic/version");
  FeatureMap fm;
  fm.kind = static_cast<FeatureMapKind>(get<std::uint8_t>(in));
  fm.reduced_rank = get<std::uint8_t>(in) != 0;
  Matrix mean_row = get_matrix(in);
  fm.mean = mean_row.transpose();
  fm.basis = get_matrix(in);
  fm.w = get_matrix(in);
  return fm;
}

}  // namespace locem
