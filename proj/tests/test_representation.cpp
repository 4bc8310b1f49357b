#include <doctest.h>

#include "locem/representation.hpp"
#include "locem/rng.hpp"

#include <Eigen/Eigenvalues>

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

}  // namespace

TEST_CASE("identity map is the identity") {
  const Dataset data = random_dataset(10, 4, 2, 1);
  const FeatureMap fm = fit_representation(data, FeatureMapSpec::identity());
  for (std::size_t i = 0; i < data.size(); ++i)
    CHECK(fm.map(data.point(i)) == Vector(data.point(i)));
  CHECK(fm.output_dim(4) == 4);
}

TEST_CASE("pca reconstructs an exact low-dimensional subspace") {
  // points lie exactly in a 2-D subspace of R^5
  auto engine = make_engine(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix basis(2, 5);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) basis(i, j) = gauss(engine);
  Matrix coeffs(40, 2);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) coeffs(i, j) = gauss(engine);
  Matrix pts = coeffs * basis;
  Dataset data(pts, std::vector<std::uint32_t>(40, 0), 1);
  const FeatureMap fm = fit_representation(data, FeatureMapSpec::pca(2));
  CHECK_FALSE(fm.reduced_rank);
  // reconstruction through the fitted basis is exact
  const Matrix mapped = fm.map_rows(pts);
  const Matrix recon = (mapped * fm.basis).rowwise() + fm.mean.transpose();
  CHECK((recon - pts).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca principal axis matches a direct eigen solve") {
  Matrix pts(3, 2);
  pts << 0.0, 0.0, 2.0, 1.0, 4.0, 2.0;  // colinear along (2,1)
  Dataset data(pts, {0, 0, 0}, 1);
  const FeatureMap fm = fit_representation(data, FeatureMapSpec::pca(1));
  // direct covariance eigen-decomposition oracle
  Vector mean = pts.colwise().mean().transpose();
  Matrix centered = pts.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / 3.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  Vector principal = eig.eigenvectors().col(1);  // largest eigenvalue last
  if (principal(0) < 0) principal = -principal;  // same sign convention
  CHECK((fm.basis.row(0).transpose() - principal).cwiseAbs().maxCoeff() < 1e-10);

  // orthonormality of the basis rows
  const Dataset bigger = random_dataset(50, 6, 2, 11);
  const FeatureMap fm3 = fit_representation(bigger, FeatureMapSpec::pca(3));
  const Matrix gram = fm3.basis * fm3.basis.transpose();
  CHECK((gram - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca flags rank deficiency") {
  Matrix pts(10, 3);
  pts.setZero();
  for (Eigen::Index i = 0; i < 10; ++i) pts(i, 0) = static_cast<double>(i);
  Dataset data(pts, std::vector<std::uint32_t>(10, 0), 1);
  const FeatureMap fm = fit_representation(data, FeatureMapSpec::pca(3));
  CHECK(fm.reduced_rank);
  CHECK(fm.basis.rows() == 1);
}

TEST_CASE("pca map is 1-Lipschitz") {
  const Dataset data = random_dataset(60, 5, 2, 17);
  const FeatureMap fm = fit_representation(data, FeatureMapSpec::pca(3));
  auto engine = make_engine(18);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    Vector a(5), b(5);
    for (Eigen::Index j = 0; j < 5; ++j) {
      a(j) = gauss(engine);
      b(j) = gauss(engine);
    }
    CHECK((fm.map(a) - fm.map(b)).norm() <= (a - b).norm() + 1e-12);
  }
}

TEST_CASE("embedding map trains and projects") {
  const Dataset data = random_dataset(50, 6, 3, 23);
  FeatureMapSpec spec = FeatureMapSpec::embedding(2, 7);
  spec.opt.max_iters = 40;
  const FeatureMap fm = fit_representation(data, spec);
  CHECK(fm.w.rows() == 2);
  CHECK(fm.w.cols() == 6);
  CHECK(fm.map(data.point(0)).size() == 2);
  // deterministic refit
  const FeatureMap fm2 = fit_representation(data, spec);
  CHECK(fm.w == fm2.w);
}

TEST_CASE("sensitivity of an identical replacement is zero") {
  const Dataset data = random_dataset(12, 4, 2, 31);
  std::vector<Vector> probes{Vector(data.point(0)), Vector(data.point(5))};
  const double delta = sensitivity_of_replacement(data, FeatureMapSpec::pca(2), 3,
                                                  Vector(data.point(3)), data.label(3), probes);
  CHECK(delta == 0.0);
}

TEST_CASE("identity map has zero sensitivity") {
  const Dataset data = random_dataset(12, 4, 2, 32);
  std::vector<Vector> probes{Vector(data.point(0))};
  CHECK(estimate_sensitivity(data, FeatureMapSpec::identity(), probes, 3, 1) == 0.0);
}

TEST_CASE("pca sensitivity matches a two-map recomputation oracle") {
  const Dataset data = random_dataset(4, 3, 2, 33);
  std::vector<Vector> probes{Vector(data.point(0)), Vector(data.point(1))};
  Vector fresh(3);
  fresh << 4.0, -2.0, 0.5;
  const FeatureMapSpec spec = FeatureMapSpec::pca(2);
  const double measured = sensitivity_of_replacement(data, spec, 2, fresh, 1, probes);

  // oracle: fit both maps explicitly and take the probe-wise norm directly
  const FeatureMap base = fit_representation(data, spec);
  Matrix pts = data.points();
  std::vector<std::uint32_t> labs = data.labels();
  pts.row(2) = fresh.transpose();
  labs[2] = 1;
  const FeatureMap alt = fit_representation(Dataset(pts, labs, 2), spec);
  double expect = 0;
  for (const auto& p : probes)
    expect = std::max(expect, (base.map(p) - alt.map(p)).norm());
  CHECK(measured == doctest::Approx(expect).epsilon(1e-12));
  CHECK(measured >= 0.0);
}

TEST_CASE("feature map serialization round-trips") {
  const Dataset data = random_dataset(30, 5, 2, 41);
  const FeatureMap fm = fit_representation(data, FeatureMapSpec::pca(2));
  const auto dir = std::filesystem::temp_directory_path() / "locem_repr_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "map.bin").string();
  fm.save(path);
  const FeatureMap loaded = FeatureMap::load(path);
  CHECK(loaded.kind == fm.kind);
  CHECK(loaded.mean == fm.mean);
  CHECK(loaded.basis == fm.basis);
  CHECK(loaded.reduced_rank == fm.reduced_rank);
  std::filesystem::remove_all(dir);
}
