#include <doctest.h>

#include "locem/extended_kernel.hpp"
#include "locem/rng.hpp"
#include "locem/train.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <random>

using namespace locem;

namespace {

Dataset random_dataset(std::uint32_t n, std::uint32_t d, std::uint32_t classes,
                       std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> lab(0, classes - 1);
  Matrix pts(n, d);
  std::vector<std::uint32_t> ys(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) pts(i, j) = gauss(engine);
    ys[i] = lab(engine);
  }
  return Dataset(std::move(pts), std::move(ys), classes);
}

LabeledSet make_set(std::initializer_list<std::pair<std::vector<double>, std::uint32_t>> rows) {
  LabeledSet set;
  const std::size_t n = rows.size();
  const std::size_t d = rows.begin()->first.size();
  set.xs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t i = 0;
  for (const auto& [x, y] : rows) {
    for (std::size_t j = 0; j < d; ++j)
      set.xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
    set.ys.push_back(y);
    ++i;
  }
  return set;
}

// scalar reference: feature kernel times the label indicator
double kz_scalar(const Vector& a, std::uint32_t ya, const Vector& b, std::uint32_t yb,
                 const KernelSpec& kz) {
  if (ya != yb) return 0.0;
  return kz(a, b);
}

}  // namespace

TEST_CASE("embedding inner product: singletons and a 6-term oracle") {
  const KernelSpec kz = KernelSpec::gaussian(1.0);
  const LabeledSet z1 = make_set({{{0.3, -0.7}, 1}});
  CHECK(embedding_inner(z1, z1, kz) == doctest::Approx(1.0).epsilon(1e-15));

  const LabeledSet z2 = make_set({{{1.1, 0.2}, 1}});
  const double expect = kz_scalar(z1.xs.row(0).transpose(), 1, z2.xs.row(0).transpose(), 1, kz);
  CHECK(embedding_inner(z1, z2, kz) == doctest::Approx(expect).epsilon(1e-15));

  // sizes 2 and 3: brute-force double sum
  const LabeledSet a = make_set({{{0.1, 0.2}, 0}, {{-0.5, 1.0}, 1}});
  const LabeledSet b = make_set({{{2.0, 0.0}, 0}, {{0.4, 0.4}, 1}, {{-1.0, 0.3}, 0}});
  double sum = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      sum += kz_scalar(a.xs.row(i).transpose(), a.ys[static_cast<std::size_t>(i)],
                       b.xs.row(j).transpose(), b.ys[static_cast<std::size_t>(j)], kz);
  CHECK(embedding_inner(a, b, kz) == doctest::Approx(sum / 6.0).epsilon(1e-14));

  CHECK_THROWS_AS(embedding_inner(LabeledSet{}, z1, kz), std::domain_error);
}

TEST_CASE("embedding squared distance") {
  const KernelSpec kz = KernelSpec::gaussian(0.8);
  const LabeledSet a = make_set({{{0.1, 0.2}, 0}, {{-0.5, 1.0}, 1}});
  CHECK(embedding_sq_dist(a, a, kz) == 0.0);

  const LabeledSet z1 = make_set({{{0.0, 0.0}, 1}});
  const LabeledSet z2 = make_set({{{1.0, 1.0}, 1}});
  const double k12 = kz(z1.xs.row(0).transpose(), z2.xs.row(0).transpose());
  CHECK(embedding_sq_dist(z1, z2, kz) == doctest::Approx(2.0 - 2.0 * k12).epsilon(1e-14));
  CHECK(embedding_sq_dist(z1, z2, kz) == doctest::Approx(embedding_sq_dist(z2, z1, kz)));
}

TEST_CASE("extended kernel composes the product form") {
  const Dataset train = random_dataset(12, 3, 2, 3);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  ExtendedKernelSpecs specs;
  specs.kx = KernelSpec::gaussian(1.5);
  specs.kz = KernelSpec::gaussian(1.0);
  specs.kappa = KernelSpec::gaussian(0.7);

  ExtendedPoint p;
  p.x = train.point(0);
  p.retrieved = idx.ball_query(p.x, 3.0, 0);
  REQUIRE_FALSE(p.retrieved.empty());
  CHECK(extended_kernel(p, p, specs, train) == doctest::Approx(1.0).epsilon(1e-14));

  // identical retrieved sets, different instances: the kappa factor is one
  ExtendedPoint q = p;
  q.x = train.point(1);
  const double expect_kx = specs.kx(p.x, q.x);
  CHECK(extended_kernel(p, q, specs, train) == doctest::Approx(expect_kx).epsilon(1e-14));

  // generic pair against a raw double-sum recomposition
  ExtendedPoint r;
  r.x = train.point(5);
  r.retrieved = idx.ball_query(r.x, 3.0, 5);
  REQUIRE_FALSE(r.retrieved.empty());
  const LabeledSet sp = gather(train, p.retrieved);
  const LabeledSet sr = gather(train, r.retrieved);
  auto raw_inner = [&](const LabeledSet& A, const LabeledSet& B) {
    double sum = 0;
    for (Eigen::Index i = 0; i < A.xs.rows(); ++i)
      for (Eigen::Index j = 0; j < B.xs.rows(); ++j)
        sum += kz_scalar(A.xs.row(i).transpose(), A.ys[static_cast<std::size_t>(i)],
                         B.xs.row(j).transpose(), B.ys[static_cast<std::size_t>(j)], specs.kz);
    return sum / (static_cast<double>(A.xs.rows()) * static_cast<double>(B.xs.rows()));
  };
  const double sq = std::max(raw_inner(sp, sp) + raw_inner(sr, sr) - 2 * raw_inner(sp, sr), 0.0);
  const double expect = specs.kx(p.x, r.x) * specs.kappa.from_sq_dist(sq);
  CHECK(extended_kernel(p, r, specs, train) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gram matrix: symmetry, unit diagonal, PSD, entrywise oracle") {
  const Dataset train = random_dataset(24, 3, 2, 9);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  ExtendedKernelSpecs specs;
  specs.kx = KernelSpec::gaussian(2.0);
  specs.kz = KernelSpec::gaussian(1.2);
  specs.kappa = KernelSpec::gaussian(0.6);
  const ExtendedGram gram = build_extended_gram(train, idx, 2.5, specs);
  const Eigen::Index n = gram.kernel.rows();
  REQUIRE(n == 24);
  CHECK((gram.kernel - gram.kernel.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 0; i < n; ++i)
    CHECK(gram.kernel(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.kernel);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * gram.kernel.diagonal().maxCoeff());

  // entrywise recomputation through the scalar path
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double expect = extended_kernel(gram.points[static_cast<std::size_t>(i)],
                                            gram.points[static_cast<std::size_t>(j)], specs, train);
      CHECK(gram.kernel(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }

  // boundedness: |k| <= M_kx * M_kappa = 1 for gaussian pieces
  CHECK(gram.kernel.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("single point gram is the unit matrix and predicts its own class") {
  Matrix pts(1, 2);
  pts << 0.5, -0.25;
  Dataset train(pts, {1}, 2);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  const ExtendedGram gram = build_extended_gram(train, idx, 1.0, ExtendedKernelSpecs{});
  REQUIRE(gram.kernel.rows() == 1);
  CHECK(gram.kernel(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gram.points[0].retrieved.indices == std::vector<std::uint32_t>{0});
  const ExtendedKernelModel model = train_extended(gram, train.labels(), 2, 1e-3);
  const auto [label, scores] = predict_extended(model, train.point(0), idx, train);
  (void)scores;
  CHECK(label == 1);
}

TEST_CASE("ridge training matches an independent dense solve") {
  const Dataset train = random_dataset(20, 3, 3, 13);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  const ExtendedGram gram = build_extended_gram(train, idx, 2.5, ExtendedKernelSpecs{});
  const double lambda = 1e-3;
  const ExtendedKernelModel model = train_extended(gram, train.labels(), 3, lambda);

  Matrix targets = Matrix::Constant(20, 3, -1.0);
  for (Eigen::Index i = 0; i < 20; ++i) targets(i, train.label(static_cast<std::size_t>(i))) = 1.0;
  Matrix system = gram.kernel + 20.0 * lambda * Matrix::Identity(20, 20);
  const Matrix oracle = Eigen::FullPivLU<Matrix>(system).solve(targets);
  CHECK((model.alpha - oracle).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(train_extended(gram, train.labels(), 3, 0.0), std::invalid_argument);
}

TEST_CASE("identity-gram ridge halves the targets") {
  // K = I and n*lambda = 1 gives (I + I) alpha = t, alpha = t/2
  ExtendedGram gram;
  gram.kernel = Matrix::Identity(4, 4);
  gram.self_inners = Vector::Ones(4);
  gram.points.resize(4);
  gram.grouped.resize(4);
  for (int i = 0; i < 4; ++i) {
    gram.points[static_cast<std::size_t>(i)].x = Vector::Zero(2);
    gram.points[static_cast<std::size_t>(i)].retrieved.indices = {0};
    gram.points[static_cast<std::size_t>(i)].retrieved.distances = {0.0};
  }
  const ExtendedKernelModel model = train_extended(gram, {0, 1, 0, 1}, 2, 0.25);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double target = i % 2 == 0 ? 1.0 : -1.0;
    CHECK(model.alpha(i, 0) == doctest::Approx(target / 2).epsilon(1e-12));
    CHECK(model.alpha(i, 1) == doctest::Approx(-target / 2).epsilon(1e-12));
  }
}

TEST_CASE("prediction at training points reproduces K alpha") {
  const Dataset train = random_dataset(18, 3, 2, 15);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  ExtendedKernelSpecs specs;
  specs.kx = KernelSpec::gaussian(1.8);
  specs.kz = KernelSpec::gaussian(1.1);
  specs.kappa = KernelSpec::gaussian(0.9);
  const ExtendedGram gram = build_extended_gram(train, idx, 2.0, specs);
  const ExtendedKernelModel model = train_extended(gram, train.labels(), 2, 1e-2);
  const Matrix expected_scores = gram.kernel * model.alpha;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto [label, scores] =
        predict_extended(model, train.point(i), idx, train, static_cast<std::int64_t>(i));
    CHECK((scores.transpose() - expected_scores.row(static_cast<Eigen::Index>(i)))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK(label == argmax_lowest(scores));
  }
}

TEST_CASE("well-separated training point predicts its own label") {
  Matrix pts(8, 2);
  pts << 0, 0, 0.2, 0, 0, 0.2, 0.2, 0.2, 10, 10, 10.2, 10, 10, 10.2, 10.2, 10.2;
  Dataset train(pts, {0, 0, 0, 0, 1, 1, 1, 1}, 2);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  ExtendedKernelSpecs specs;
  specs.kx = KernelSpec::gaussian(1.0);
  specs.kz = KernelSpec::gaussian(1.0);
  specs.kappa = KernelSpec::gaussian(0.5);
  const ExtendedGram gram = build_extended_gram(train, idx, 1.0, specs);
  const ExtendedKernelModel model = train_extended(gram, train.labels(), 2, 1e-4);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto [label, scores] =
        predict_extended(model, train.point(i), idx, train, static_cast<std::int64_t>(i));
    (void)scores;
    CHECK(label == train.label(i));
  }
}

TEST_CASE("extreme regularization drives scores to zero, where the tie rule rules") {
  const Dataset train = random_dataset(10, 2, 2, 17);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  const ExtendedGram gram = build_extended_gram(train, idx, 2.0, ExtendedKernelSpecs{});
  const ExtendedKernelModel model = train_extended(gram, train.labels(), 2, 1e9);
  Vector probe = Vector::Zero(2);
  const auto [label, scores] = predict_extended(model, probe, idx, train);
  (void)label;
  CHECK(scores.cwiseAbs().maxCoeff() < 1e-6);
  // in the exact lambda -> infinity limit the scores vanish and the
  // lowest-index tie rule decides
  CHECK(argmax_lowest(Vector::Zero(2)) == 0);
}

TEST_CASE("gaussian kappa satisfies the Lipschitz smoothness probe") {
  // RKHS distance between kappa features is sqrt(2 - 2 kappa); for gaussian
  // kappa of the embedding distance it is bounded by dist / bandwidth
  const KernelSpec kz = KernelSpec::gaussian(1.0);
  const KernelSpec kappa = KernelSpec::gaussian(0.75);
  auto engine = make_engine(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    LabeledSet a, b;
    const int ma = 1 + t % 3, mb = 1 + (t / 3) % 3;
    a.xs.resize(ma, 2);
    b.xs.resize(mb, 2);
    for (int i = 0; i < ma; ++i) {
      a.xs(i, 0) = gauss(engine);
      a.xs(i, 1) = gauss(engine);
      a.ys.push_back(static_cast<std::uint32_t>(i % 2));
    }
    for (int i = 0; i < mb; ++i) {
      b.xs(i, 0) = gauss(engine);
      b.xs(i, 1) = gauss(engine);
      b.ys.push_back(static_cast<std::uint32_t>(i % 2));
    }
    const double sq = embedding_sq_dist(a, b, kz);
    const double kv = kappa.from_sq_dist(sq);
    const double feature_dist = std::sqrt(std::max(2.0 - 2.0 * kv, 0.0));
    CHECK(feature_dist <= std::sqrt(sq) / kappa.bandwidth + 1e-10);
  }
}

TEST_CASE("gram disk cache round-trips") {
  const Dataset train = random_dataset(15, 3, 2, 23);
  const RetrievalIndex idx = RetrievalIndex::build(train);
  const auto dir = std::filesystem::temp_directory_path() / "locem_gram_cache";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const ExtendedGram fresh = build_extended_gram(train, idx, 2.0, ExtendedKernelSpecs{},
                                                 dir.string());
  const ExtendedGram cached = build_extended_gram(train, idx, 2.0, ExtendedKernelSpecs{},
                                                  dir.string());
  CHECK(fresh.kernel == cached.kernel);
  CHECK(cached.embedding_inners.size() == 0);  // served from disk
  std::filesystem::remove_all(dir);
}
