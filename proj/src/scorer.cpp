#include "locem/scorer.hpp"

namespace locem {

namespace {

void validate(const Scorer::Variant& v, std::uint32_t& classes, std::uint32_t& dim) {
  if (const auto* lin = std::get_if<LinearScorer>(&v)) {
    if (lin->weights.rows() != lin->bias.size())
      throw std::invalid_argument("linear scorer: weight rows must match bias length");
    classes = static_cast<std::uint32_t>(lin->weights.rows());
    dim = static_cast<std::uint32_t>(lin->weights.cols());
  } else if (const auto* mlp = std::get_if<MlpScorer>(&v)) {
    if (mlp->w1.rows() != mlp->b1.size() || mlp->w2.rows() != mlp->b2.size() ||
        mlp->w2.cols() != mlp->w1.rows())
      throw std::invalid_argument("mlp scorer: inconsistent layer shapes");
    classes = static_cast<std::uint32_t>(mlp->w2.rows());
    dim = static_cast<std::uint32_t>(mlp->w1.cols());
  } else {
    const auto& ker = std::get<KernelScorer>(v);
    if (ker.anchors.rows() != ker.alpha.rows())
      throw std::invalid_argument("kernel scorer: anchor count must match alpha rows");
    classes = static_cast<std::uint32_t>(ker.alpha.cols());
    dim = static_cast<std::uint32_t>(ker.anchors.cols());
  }
  if (classes == 0) throw std::invalid_argument("scorer: needs at least one class");
}

}  // namespace

Scorer::Scorer(Variant v) : v_(std::move(v)) { validate(v_, num_classes_, input_dim_); }

Scorer Scorer::zero_linear(std::uint32_t num_classes, std::uint32_t dim) {
  LinearScorer lin;
  lin.weights = Matrix::Zero(num_classes, dim);
  lin.bias = Vector::Zero(num_classes);
  return Scorer(std::move(lin));
}

Vector Scorer::score(const Eigen::Ref<const Vector>& x) const {
  if (static_cast<std::uint32_t>(x.size()) != input_dim_)
    throw std::invalid_argument("scorer: input dimension mismatch");
  if (const auto* lin = std::get_if<LinearScorer>(&v_)) {
    return lin->weights * x + lin->bias;
  }
  if (const auto* mlp = std::get_if<MlpScorer>(&v_)) {
    Vector h = (mlp->w1 * x + mlp->b1).array().tanh();
    return mlp->w2 * h + mlp->b2;
  }
  const auto& ker = std::get<KernelScorer>(v_);
  Vector kvec(ker.anchors.rows());
  for (Eigen::Index j = 0; j < ker.anchors.rows(); ++j)
    kvec(j) = ker.kernel(ker.anchors.row(j).transpose(), x);
  return ker.alpha.transpose() * kvec;
}

Matrix Scorer::score_rows(const Eigen::Ref<const Matrix>& xs) const {
  if (static_cast<std::uint32_t>(xs.cols()) != input_dim_)
    throw std::invalid_argument("scorer: input dimension mismatch");
  if (const auto* lin = std::get_if<LinearScorer>(&v_)) {
    return (xs * lin->weights.transpose()).rowwise() + lin->bias.transpose();
  }
  if (const auto* mlp = std::get_if<MlpScorer>(&v_)) {
    Matrix h = ((xs * mlp->w1.transpose()).rowwise() + mlp->b1.transpose()).array().tanh();
    return (h * mlp->w2.transpose()).rowwise() + mlp->b2.transpose();
  }
  Matrix out(xs.rows(), num_classes_);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out.row(i) = score(xs.row(i).transpose()).transpose();
  return out;
}

}  // namespace locem
