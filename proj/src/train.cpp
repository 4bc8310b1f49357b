#include "locem/train.hpp"

#include "locem/rng.hpp"

#include <cmath>

namespace locem {

double margin_of_scores(const Eigen::Ref<const Vector>& scores, std::uint32_t y) {
  if (scores.size() < 2) throw std::domain_error("margin: needs at least two classes");
  if (y >= static_cast<std::uint32_t>(scores.size()))
    throw std::domain_error("margin: class index out of range");
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < scores.size(); ++c)
    if (static_cast<std::uint32_t>(c) != y && scores(c) > best_other) best_other = scores(c);
  return scores(y) - best_other;
}

double margin(const Scorer& f, const Eigen::Ref<const Vector>& x, std::uint32_t y) {
  return margin_of_scores(f.score(x), y);
}

std::uint32_t argmax_lowest(const Eigen::Ref<const Vector>& scores) {
  if (scores.size() == 0) throw std::domain_error("argmax: empty score vector");
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c)
    if (scores(c) > scores(best)) best = c;
  return static_cast<std::uint32_t>(best);
}

std::uint32_t classify(const Scorer& f, const Eigen::Ref<const Vector>& x) {
  return argmax_lowest(f.score(x));
}

double empirical_risk(const Scorer& f, const Dataset& data, const LossSpec& loss) {
  if (data.size() == 0) throw std::domain_error("empirical risk: empty dataset");
  Matrix scores = f.score_rows(data.points());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += loss.value(margin_of_scores(scores.row(static_cast<Eigen::Index>(i)).transpose(), data.label(i)));
  return total / static_cast<double>(data.size());
}

double accuracy(const Scorer& f, const Dataset& data) {
  if (data.size() == 0) throw std::domain_error("accuracy: empty dataset");
  Matrix scores = f.score_rows(data.points());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (argmax_lowest(scores.row(static_cast<Eigen::Index>(i)).transpose()) == data.label(i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

FamilySpec FamilySpec::linear() { return FamilySpec{}; }

FamilySpec FamilySpec::mlp(std::uint32_t hidden) {
  if (hidden == 0) throw std::invalid_argument("mlp family: hidden width must be positive");
  FamilySpec s;
  s.kind = FamilyKind::mlp;
  s.hidden = hidden;
  return s;
}

FamilySpec FamilySpec::kernel_machine(const KernelSpec& k) {
  FamilySpec s;
  s.kind = FamilyKind::kernel_machine;
  s.kernel = k;
  return s;
}

Vector gradient_descent(const std::function<double(const Vector&, Vector*)>& obj,
                        Vector theta, const OptConfig& opt) {
  Vector grad(theta.size());
  double fx = obj(theta, &grad);
  for (std::uint32_t iter = 0; iter < opt.max_iters; ++iter) {
    if (!std::isfinite(fx)) throw NumericError("optimization diverged: non-finite objective");
    double g2 = grad.squaredNorm();
    if (std::sqrt(g2) <= opt.grad_tol) break;
    double t = opt.step;
    Vector cand;
    double fc;
    bool accepted = false;
    while (t >= 1e-14) {
      cand = theta - t * grad;
      fc = obj(cand, nullptr);
      if (std::isfinite(fc) && fc <= fx - 1e-4 * t * g2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent direction progress at machine scale
    theta = std::move(cand);
    fx = obj(theta, &grad);
  }
  if (!std::isfinite(fx)) throw NumericError("optimization diverged: non-finite objective");
  return theta;
}

namespace {

// Accumulates margin-loss value and score-space gradient for a batch.
// Returns the mean loss; d_scores (if non-null) receives dL/dS including 1/m.
double margin_loss_batch(const Matrix& scores, const std::vector<std::uint32_t>& ys,
                         const LossSpec& loss, Matrix* d_scores) {
  const Eigen::Index m = scores.rows();
  const double inv_m = 1.0 / static_cast<double>(m);
  double total = 0.0;
  if (d_scores) d_scores->setZero(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
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
    total += loss.value(g);
    if (d_scores) {
      const double dl = loss.derivative(g) * inv_m;
      (*d_scores)(i, y) += dl;
      (*d_scores)(i, rival) -= dl;
    }
  }
  return total * inv_m;
}

struct LinearParams {
  Eigen::Index classes, dim;
  Eigen::Map<const Matrix> w(const Vector& t) const {
    return Eigen::Map<const Matrix>(t.data(), classes, dim);
  }
  Eigen::Map<const Vector> b(const Vector& t) const {
    return Eigen::Map<const Vector>(t.data() + classes * dim, classes);
  }
  Eigen::Index size() const { return classes * dim + classes; }
};

struct MlpParams {
  Eigen::Index classes, dim, hidden;
  Eigen::Index size() const { return hidden * dim + hidden + classes * hidden + classes; }
  Eigen::Map<const Matrix> w1(const Vector& t) const {
    return Eigen::Map<const Matrix>(t.data(), hidden, dim);
  }
  Eigen::Map<const Vector> b1(const Vector& t) const {
    return Eigen::Map<const Vector>(t.data() + hidden * dim, hidden);
  }
  Eigen::Map<const Matrix> w2(const Vector& t) const {
    return Eigen::Map<const Matrix>(t.data() + hidden * dim + hidden, classes, hidden);
  }
  Eigen::Map<const Vector> b2(const Vector& t) const {
    return Eigen::Map<const Vector>(t.data() + hidden * dim + hidden + classes * hidden, classes);
  }
};

Scorer fit_linear(const Eigen::Ref<const Matrix>& xs, const std::vector<std::uint32_t>& ys,
                  std::uint32_t num_classes, const LossSpec& loss, double l2,
                  const OptConfig& opt) {
  const LinearParams p{static_cast<Eigen::Index>(num_classes), xs.cols()};
  auto obj = [&](const Vector& t, Vector* grad) {
    Matrix scores = (xs * p.w(t).transpose()).rowwise() + p.b(t).transpose();
    Matrix d_scores;
    double val = margin_loss_batch(scores, ys, loss, grad ? &d_scores : nullptr);
    val += l2 * p.w(t).squaredNorm();
    if (grad) {
      grad->resize(p.size());
      Eigen::Map<Matrix>(grad->data(), p.classes, p.dim) =
          d_scores.transpose() * xs + 2.0 * l2 * p.w(t);
      Eigen::Map<Vector>(grad->data() + p.classes * p.dim, p.classes) =
          d_scores.colwise().sum().transpose();
    }
    return val;
  };
  Vector theta = gradient_descent(obj, Vector::Zero(p.size()), opt);
  LinearScorer lin;
  lin.weights = p.w(theta);
  lin.bias = p.b(theta);
  return Scorer(std::move(lin));
}

Scorer fit_mlp(const Eigen::Ref<const Matrix>& xs, const std::vector<std::uint32_t>& ys,
               std::uint32_t num_classes, std::uint32_t hidden, const LossSpec& loss, double l2,
               const OptConfig& opt) {
  const MlpParams p{static_cast<Eigen::Index>(num_classes), xs.cols(),
                    static_cast<Eigen::Index>(hidden)};
  auto obj = [&](const Vector& t, Vector* grad) {
    Matrix h = ((xs * p.w1(t).transpose()).rowwise() + p.b1(t).transpose()).array().tanh();
    Matrix scores = (h * p.w2(t).transpose()).rowwise() + p.b2(t).transpose();
    Matrix d_scores;
    double val = margin_loss_batch(scores, ys, loss, grad ? &d_scores : nullptr);
    val += l2 * (p.w1(t).squaredNorm() + p.w2(t).squaredNorm());
    if (grad) {
      grad->resize(p.size());
      Matrix d_h = d_scores * p.w2(t);
      Matrix d_pre = d_h.array() * (1.0 - h.array().square());
      Eigen::Map<Matrix>(grad->data(), p.hidden, p.dim) =
          d_pre.transpose() * xs + 2.0 * l2 * p.w1(t);
      Eigen::Map<Vector>(grad->data() + p.hidden * p.dim, p.hidden) =
          d_pre.colwise().sum().transpose();
      Eigen::Map<Matrix>(grad->data() + p.hidden * p.dim + p.hidden, p.classes, p.hidden) =
          d_scores.transpose() * h + 2.0 * l2 * p.w2(t);
      Eigen::Map<Vector>(grad->data() + p.hidden * p.dim + p.hidden + p.classes * p.hidden,
                         p.classes) = d_scores.colwise().sum().transpose();
    }
    return val;
  };
  // w1 random (seeded) so the hidden units separate; w2 zero keeps the initial
  // scorer identical to the zero scorer while its gradient is already nonzero.
  Vector theta = Vector::Zero(p.size());
  auto engine = make_engine(derive_seed(opt.seed, 0x6d6c70u));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(p.dim)));
  for (Eigen::Index i = 0; i < p.hidden * p.dim; ++i) theta(i) = gauss(engine);
  theta = gradient_descent(obj, std::move(theta), opt);
  MlpScorer mlp;
  mlp.w1 = p.w1(theta);
  mlp.b1 = p.b1(theta);
  mlp.w2 = p.w2(theta);
  mlp.b2 = p.b2(theta);
  return Scorer(std::move(mlp));
}

Scorer fit_kernel_machine(const Eigen::Ref<const Matrix>& xs,
                          const std::vector<std::uint32_t>& ys, std::uint32_t num_classes,
                          const KernelSpec& kernel, const LossSpec& loss, double l2,
                          const OptConfig& opt) {
  const Eigen::Index m = xs.rows();
  Matrix gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double k = kernel(xs.row(i).transpose(), xs.row(j).transpose());
      gram(i, j) = k;
      gram(j, i) = k;
    }
  const Eigen::Index classes = static_cast<Eigen::Index>(num_classes);
  auto obj = [&](const Vector& t, Vector* grad) {
    Eigen::Map<const Matrix> alpha(t.data(), m, classes);
    Matrix gram_alpha = gram * alpha;  // doubles as the score matrix
    Matrix d_scores;
    double val = margin_loss_batch(gram_alpha, ys, loss, grad ? &d_scores : nullptr);
    val += l2 * (alpha.array() * gram_alpha.array()).sum();
    if (grad) {
      grad->resize(t.size());
      Eigen::Map<Matrix>(grad->data(), m, classes) = gram * d_scores + 2.0 * l2 * gram_alpha;
    }
    return val;
  };
  Vector theta = gradient_descent(obj, Vector::Zero(m * classes), opt);
  KernelScorer ker;
  ker.anchors = xs;
  ker.alpha = Eigen::Map<const Matrix>(theta.data(), m, classes);
  ker.kernel = kernel;
  return Scorer(std::move(ker));
}

}  // namespace

Scorer fit_scorer(const Eigen::Ref<const Matrix>& xs, const std::vector<std::uint32_t>& ys,
                  std::uint32_t num_classes, const FamilySpec& family, const LossSpec& loss,
                  double l2, const OptConfig& opt) {
  if (static_cast<std::size_t>(xs.rows()) != ys.size())
    throw std::invalid_argument("fit: row count does not match label count");
  if (xs.rows() == 0) throw std::domain_error("fit: empty point set");
  if (l2 < 0) throw std::invalid_argument("fit: l2 penalty must be nonnegative");
  // A single class has nothing to separate; the zero scorer already predicts it.
  if (num_classes < 2) return Scorer::zero_linear(std::max<std::uint32_t>(num_classes, 1),
                                                  static_cast<std::uint32_t>(xs.cols()));
  Scorer fitted = [&] {
    switch (family.kind) {
      case FamilyKind::linear:
        return fit_linear(xs, ys, num_classes, loss, l2, opt);
      case FamilyKind::mlp:
        return fit_mlp(xs, ys, num_classes, family.hidden, loss, l2, opt);
      case FamilyKind::kernel_machine:
        return fit_kernel_machine(xs, ys, num_classes, family.kernel, loss, l2, opt);
    }
    throw std::logic_error("unreachable family kind");
  }();
  // The optimizer starts at (an output-equivalent of) the zero scorer, so the
  // fitted risk can only tie the zero scorer's through the penalty term; keep
  // the contract airtight regardless.
  Matrix scores = fitted.score_rows(xs);
  double fitted_risk = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    fitted_risk += loss.value(margin_of_scores(scores.row(i).transpose(), ys[static_cast<std::size_t>(i)]));
  fitted_risk /= static_cast<double>(xs.rows());
  if (fitted_risk > loss.value(0.0))
    return Scorer::zero_linear(num_classes, static_cast<std::uint32_t>(xs.cols()));
  return fitted;
}

Scorer train_global(const Dataset& data, const FamilySpec& family, const LossSpec& loss,
                    double l2, const OptConfig& opt) {
  if (data.size() < data.num_classes())
    throw std::domain_error("train: need at least num_classes examples");
  return fit_scorer(data.points(), data.labels(), data.num_classes(), family, loss, l2, opt);
}

}  // namespace locem
