#include "locem/bounds.hpp"

#include "locem/rng.hpp"
#include "locem/threading.hpp"
#include "locem/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace locem {

double compute_mr(double lipschitz, double radius, double loss_lipschitz, double sup_norm,
                  double c_true, double alpha_true, double l_true) {
  if (lipschitz < 0 || radius < 0 || loss_lipschitz < 0 || sup_norm < 0 || c_true < 0 ||
      l_true < 0)
    throw std::invalid_argument("M_r: inputs must be nonnegative");
  if (alpha_true <= 0) throw std::invalid_argument("M_r: alpha_true must be positive");
  const double lr = lipschitz * radius;
  return 2.0 * loss_lipschitz *
         (lr + (std::max(lr, 2.0 * sup_norm) - lr) * c_true *
                   std::pow(2.0 * l_true * radius, alpha_true));
}

MarginFit fit_weak_margin(const std::vector<double>& margins, const std::vector<double>& grid) {
  if (margins.size() < 10) throw std::invalid_argument("margin fit: need at least 10 samples");
  if (grid.empty()) throw std::invalid_argument("margin fit: empty grid");
  for (double t : grid)
    if (t <= 0) throw std::invalid_argument("margin fit: grid must be strictly positive");
  std::vector<double> abs_margins(margins.size());
  bool any_nonzero = false;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    abs_margins[i] = std::abs(margins[i]);
    any_nonzero = any_nonzero || abs_margins[i] != 0.0;
  }
  if (!any_nonzero) throw std::domain_error("margin fit: all margins zero, fit degenerate");
  std::sort(abs_margins.begin(), abs_margins.end());
  const double n = static_cast<double>(abs_margins.size());
  auto cdf = [&](double t) {
    const auto it = std::upper_bound(abs_margins.begin(), abs_margins.end(), t);
    return static_cast<double>(it - abs_margins.begin()) / n;
  };

  std::vector<double> log_t, log_f;
  for (double t : grid) {
    const double f = cdf(t);
    if (f > 0) {
      log_t.push_back(std::log(t));
      log_f.push_back(std::log(f));
    }
  }
  MarginFit fit;
  if (log_t.empty()) {
    fit.degenerate = true;  // the grid saw no mass at all: alpha undefined
    return fit;
  }
  double alpha = 1.0, intercept = 0.0;
  const std::size_t m = log_t.size();
  double mean_t = 0, mean_f = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_t += log_t[i];
    mean_f += log_f[i];
  }
  mean_t /= static_cast<double>(m);
  mean_f /= static_cast<double>(m);
  double var_t = 0, cov = 0;
  for (std::size_t i = 0; i < m; ++i) {
    var_t += (log_t[i] - mean_t) * (log_t[i] - mean_t);
    cov += (log_t[i] - mean_t) * (log_f[i] - mean_f);
  }
  if (var_t > 0) {
    alpha = cov / var_t;
    intercept = mean_f - alpha * mean_t;
  } else {
    intercept = mean_f - alpha * mean_t;  // single usable abscissa: keep slope 1
  }
  fit.alpha = std::max(alpha, 1e-9);
  double c = std::exp(intercept);
  double rss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pred = intercept + fit.alpha * log_t[i];
    rss += (pred - log_f[i]) * (pred - log_f[i]);
  }
  fit.residual = std::sqrt(rss / static_cast<double>(m));
  // Definition-side semantics: the curve must dominate the empirical CDF on
  // the whole grid, so only ever inflate c.
  for (double t : grid) c = std::max(c, cdf(t) / std::pow(t, fit.alpha));
  fit.c = c;
  return fit;
}

namespace {

double linear_ball_sup(const Matrix& points, const std::vector<int>& signs, double ball_radius) {
  Vector sum = Vector::Zero(points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    sum += static_cast<double>(signs[static_cast<std::size_t>(i)]) * points.row(i).transpose();
  return ball_radius * sum.norm() / static_cast<double>(points.rows());
}

}  // namespace

RademacherEstimate rademacher_linear_ball(const Matrix& points, double ball_radius,
                                          std::uint32_t mc_draws, std::uint64_t seed,
                                          std::uint32_t max_exhaustive) {
  const Eigen::Index m = points.rows();
  if (m == 0) throw std::invalid_argument("rademacher: empty point set");
  if (ball_radius < 0) throw std::invalid_argument("rademacher: ball radius must be nonnegative");
  RademacherEstimate est;
  std::vector<int> signs(static_cast<std::size_t>(m), 1);
  if (static_cast<std::uint32_t>(m) <= max_exhaustive) {
    est.exhaustive = true;
    const std::uint64_t count = 1ull << m;
    double total = 0;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      for (Eigen::Index i = 0; i < m; ++i)
        signs[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? 1 : -1;
      total += linear_ball_sup(points, signs, ball_radius);
    }
    est.value = total / static_cast<double>(count);
    return est;
  }
  if (mc_draws == 0) throw std::invalid_argument("rademacher: mc_draws must be positive");
  // per-draw seeds keep the sigma streams independent of scheduling
  std::vector<double> values(mc_draws);
  parallel_for(mc_draws, [&](std::size_t d) {
    std::vector<int> draw_signs(static_cast<std::size_t>(m));
    auto engine = make_engine(derive_seed(seed, 0x726164u, d));
    std::bernoulli_distribution coin(0.5);
    for (auto& s : draw_signs) s = coin(engine) ? 1 : -1;
    values[d] = linear_ball_sup(points, draw_signs, ball_radius);
  });
  double total = 0, total_sq = 0;
  for (double v : values) {
    total += v;
    total_sq += v * v;
  }
  const double mean = total / mc_draws;
  est.value = mean;
  if (mc_draws > 1) {
    const double var = std::max(0.0, (total_sq - mc_draws * mean * mean) / (mc_draws - 1));
    est.std_error = std::sqrt(var / mc_draws);
  }
  return est;
}

namespace {

// sigma-weighted centered loss objective and its gradient in W (C x d).
double composed_objective(const Matrix& w, const Matrix& points,
                          const std::vector<std::uint32_t>& labels, const Vector& anchor_x,
                          std::uint32_t anchor_y, const LossSpec& loss,
                          const std::vector<int>& signs, Matrix* grad) {
  const Eigen::Index m = points.rows();
  const double inv_m = 1.0 / static_cast<double>(m);
  if (grad) grad->setZero(w.rows(), w.cols());
  double total = 0;
  double sign_sum = 0;
  auto term = [&](const Eigen::Ref<const Vector>& x, std::uint32_t y, double weight) {
    Vector scores = w * x;
    Eigen::Index rival = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < scores.size(); ++c) {
      if (static_cast<std::uint32_t>(c) == y) continue;
      if (scores(c) > best) {
        best = scores(c);
        rival = c;
      }
    }
    const double g = scores(y) - best;
    total += weight * loss.value(g);
    if (grad) {
      const double dl = weight * loss.derivative(g);
      grad->row(y) += dl * x.transpose();
      grad->row(rival) -= dl * x.transpose();
    }
  };
  for (Eigen::Index i = 0; i < m; ++i) {
    const double weight = static_cast<double>(signs[static_cast<std::size_t>(i)]) * inv_m;
    sign_sum += static_cast<double>(signs[static_cast<std::size_t>(i)]);
    term(points.row(i).transpose(), labels[static_cast<std::size_t>(i)], weight);
  }
  term(anchor_x, anchor_y, -sign_sum * inv_m);  // centering on the anchor loss
  return total;
}

}  // namespace

RademacherEstimate rademacher_loss_composed(const Matrix& points,
                                            const std::vector<std::uint32_t>& labels,
                                            const Vector& anchor_x, std::uint32_t anchor_y,
                                            std::uint32_t num_classes, double weight_bound,
                                            const LossSpec& loss, std::uint32_t mc_draws,
                                            std::uint32_t restarts, std::uint64_t seed) {
  const Eigen::Index m = points.rows();
  if (m == 0) throw std::invalid_argument("rademacher: empty point set");
  if (num_classes < 2) throw std::invalid_argument("rademacher: need at least two classes");
  if (mc_draws == 0 || restarts == 0)
    throw std::invalid_argument("rademacher: mc_draws and restarts must be positive");
  const Eigen::Index d = points.cols();
  RademacherEstimate est;
  est.lower_bound = true;
  std::vector<double> values(mc_draws);
  parallel_for(mc_draws, [&](std::size_t draw) {
    std::vector<int> signs(static_cast<std::size_t>(m));
    auto engine = make_engine(derive_seed(seed, 0x72636cu, draw));
    std::bernoulli_distribution coin(0.5);
    for (auto& s : signs) s = coin(engine) ? 1 : -1;
    double best = 0;  // W = 0 is always feasible and scores 0
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::uint32_t r = 0; r < restarts; ++r) {
      Matrix w(num_classes, d);
      if (r == 0) {
        w.setZero();
      } else {
        for (Eigen::Index i = 0; i < w.rows(); ++i)
          for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = gauss(engine);
        if (w.norm() > weight_bound && w.norm() > 0) w *= weight_bound / w.norm();
      }
      Matrix grad(num_classes, d);
      double fx = composed_objective(w, points, labels, anchor_x, anchor_y, loss, signs, &grad);
      double step = std::max(weight_bound, 1e-3);
      for (int iter = 0; iter < 80; ++iter) {
        if (grad.norm() < 1e-10) break;
        Matrix cand = w + step * grad;
        if (cand.norm() > weight_bound && cand.norm() > 0)
          cand *= weight_bound / cand.norm();
        const double fc =
            composed_objective(cand, points, labels, anchor_x, anchor_y, loss, signs, nullptr);
        if (fc > fx) {
          w = std::move(cand);
          fx = composed_objective(w, points, labels, anchor_x, anchor_y, loss, signs, &grad);
        } else {
          step *= 0.5;
          if (step < 1e-12) break;
        }
      }
      best = std::max(best, fx);
    }
    values[draw] = best;
  });
  double total = 0, total_sq = 0;
  for (double v : values) {
    total += v;
    total_sq += v * v;
  }
  const double mean = total / mc_draws;
  est.value = mean;
  if (mc_draws > 1) {
    const double var = std::max(0.0, (total_sq - mc_draws * mean * mean) / (mc_draws - 1));
    est.std_error = std::sqrt(var / mc_draws);
  }
  return est;
}

namespace {

double pos_log(double x) { return std::max(std::log(x), 0.0); }

}  // namespace

double class_complexity_bound(const FunctionClassSpec& spec, double loss_lipschitz,
                              double n_retrieved, double n, double delta) {
  if (n_retrieved < 1) throw std::invalid_argument("complexity bound: N must be >= 1");
  if (n < 1) throw std::invalid_argument("complexity bound: n must be >= 1");
  if (delta < 0) throw std::invalid_argument("complexity bound: delta must be nonnegative");
  const double c = spec.universal_constant;
  if (const auto* inf = std::get_if<RkhsInfClass>(&spec.cls)) {
    if (inf->norm_bound <= 0) throw std::invalid_argument("complexity bound: B must be positive");
    const double log_term = std::pow(pos_log(n + 1.0), 1.5);
    return c * (std::sqrt(static_cast<double>(inf->num_classes)) * loss_lipschitz *
                    inf->norm_bound * log_term / std::sqrt(n_retrieved) +
                2.0 * delta * inf->norm_bound);
  }
  if (const auto* l2 = std::get_if<RkhsL2Class>(&spec.cls)) {
    if (l2->norm_bound <= 0) throw std::invalid_argument("complexity bound: B must be positive");
    const double log_term = std::pow(pos_log(n * static_cast<double>(l2->num_classes)), 1.5);
    return c * (loss_lipschitz * l2->norm_bound * log_term / std::sqrt(n_retrieved) +
                2.0 * delta * l2->norm_bound);
  }
  const auto& ff = std::get<FeedForwardClass>(spec.cls);
  const std::size_t layers = ff.widths.size();
  if (layers == 0 || ff.spectral_bounds.size() != layers || ff.norm21_bounds.size() != layers)
    throw std::invalid_argument("complexity bound: inconsistent feed-forward spec");
  double spectral_product = 1.0, kappa_ratio = 0.0, d_max = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    if (ff.spectral_bounds[l] <= 0 || ff.norm21_bounds[l] <= 0)
      throw std::invalid_argument("complexity bound: layer bounds must be positive");
    spectral_product *= ff.spectral_bounds[l];
    kappa_ratio = std::max(kappa_ratio, ff.norm21_bounds[l] / ff.spectral_bounds[l]);
    d_max = std::max(d_max, static_cast<double>(ff.widths[l]));
  }
  const double b_tilde = ff.input_norm_bound * spectral_product;
  const double log_term = std::pow(pos_log(loss_lipschitz * b_tilde * std::sqrt(n)), 1.5);
  return c * (loss_lipschitz * b_tilde * std::sqrt(kappa_ratio) * pos_log(d_max) *
                  std::pow(static_cast<double>(layers), 0.75) * log_term / std::sqrt(n_retrieved) +
              2.0 * delta * b_tilde);
}

namespace {

void validate_inputs(const BoundInputs& in) {
  if (in.delta <= 0 || in.delta >= 1)
    throw std::invalid_argument("bound inputs: delta must be in (0,1)");
  if (in.n_retrieved < 1) throw std::invalid_argument("bound inputs: N must be >= 1");
  const double nonneg[] = {in.loss_lipschitz, in.l_loc,         in.l_global,
                           in.l_true,         in.c_true,        in.eps_x,
                           in.eps_loc,        in.sup_norm_local, in.sup_norm_global,
                           in.radius,         in.rademacher};
  for (double v : nonneg)
    if (v < 0) throw std::invalid_argument("bound inputs: values must be nonnegative");
  if (in.alpha_true <= 0) throw std::invalid_argument("bound inputs: alpha_true must be positive");
}

}  // namespace

BoundReport assemble_local_erm_bound(const BoundInputs& inputs) {
  validate_inputs(inputs);
  BoundReport report;
  report.inputs = inputs;
  report.term_i = inputs.eps_x + inputs.eps_loc;
  const double mr_local = compute_mr(inputs.l_loc, inputs.radius, inputs.loss_lipschitz,
                                     inputs.sup_norm_local, inputs.c_true, inputs.alpha_true,
                                     inputs.l_true);
  const double mr_global = compute_mr(inputs.l_global, inputs.radius, inputs.loss_lipschitz,
                                      inputs.sup_norm_global, inputs.c_true, inputs.alpha_true,
                                      inputs.l_true);
  report.term_ii = mr_local + mr_global;
  const double ln4d = std::log(4.0 / inputs.delta);
  report.term_iii_rademacher = 2.0 * inputs.rademacher;
  report.term_iii_deviation = 5.0 * mr_local * std::sqrt(2.0 * ln4d / inputs.n_retrieved);
  report.term_iii_tail = 4.0 * inputs.delta * inputs.loss_lipschitz * inputs.sup_norm_local *
                         (2.0 + std::sqrt(2.0 * ln4d));
  report.total = report.term_i + report.term_ii + report.term_iii_rademacher +
                 report.term_iii_deviation + report.term_iii_tail;
  return report;
}

double two_stage_deviation_term(double m_loss, double delta_hat, double lipschitz,
                      double loss_lipschitz_inf, std::uint32_t retrieved, double delta) {
  if (retrieved < 1) throw std::invalid_argument("two-stage deviation: retrieved count must be >= 1");
  if (delta <= 0 || delta >= 1) throw std::invalid_argument("two-stage deviation: delta must be in (0,1)");
  if (m_loss < 0 || delta_hat < 0 || lipschitz < 0 || loss_lipschitz_inf < 0)
    throw std::invalid_argument("two-stage deviation: inputs must be nonnegative");
  const double m = static_cast<double>(retrieved);
  return (m_loss + 2.0 * delta_hat * lipschitz * loss_lipschitz_inf * m) *
         std::sqrt(std::log(1.0 / delta) / (2.0 * m));
}

double extended_deviation_bound(double c1, double c2, double c3, std::uint32_t n,
                         std::uint32_t num_classes, double n_retrieved, double delta) {
  if (n < 1 || num_classes < 1) throw std::invalid_argument("extended deviation: n and |Y| must be >= 1");
  if (n_retrieved < 1) throw std::invalid_argument("extended deviation: N must be >= 1");
  if (delta <= 0 || delta >= 1) throw std::invalid_argument("extended deviation: delta must be in (0,1)");
  const double dn = static_cast<double>(n);
  const double log_term =
      std::pow(std::log(std::sqrt(2.0) * dn * static_cast<double>(num_classes)), 1.5);
  return c1 / std::sqrt(dn) * (1.0 + log_term) +
         c2 * std::sqrt(std::log(dn / delta) / n_retrieved) +
         c3 * std::sqrt(std::log(1.0 / delta) / dn);
}

double empirical_coord_lipschitz(const Scorer& f, const Dataset& data, std::uint32_t pairs,
                                 std::uint64_t seed) {
  if (data.size() < 2) throw std::invalid_argument("lipschitz probe: need at least two points");
  auto engine = make_engine(derive_seed(seed, 0x6c6970u));
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(data.size()) - 1);
  double worst = 0;
  for (std::uint32_t p = 0; p < pairs; ++p) {
    const std::uint32_t i = pick(engine);
    const std::uint32_t j = pick(engine);
    if (i == j) continue;
    const double dist = (data.point(i) - data.point(j)).norm();
    if (dist == 0) continue;
    const Vector si = f.score(data.point(i));
    const Vector sj = f.score(data.point(j));
    worst = std::max(worst, (si - sj).cwiseAbs().maxCoeff() / dist);
  }
  return worst;
}

std::string format_bound_report(const BoundReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "excess-risk bound, local ERM\n"
      << "  (I)   local vs global optimal loss    " << r.term_i << '\n'
      << "  (II)  sample vs retrieved-set risk    " << r.term_ii << '\n'
      << "  (III) generalization of local ERM\n"
      << "        2 * rademacher                  " << r.term_iii_rademacher << '\n'
      << "        5 * M_r * sqrt(2 ln(4/d) / N)   " << r.term_iii_deviation << '\n'
      << "        4 d L_l |F|inf (2+sqrt(2ln4/d)) " << r.term_iii_tail << '\n'
      << "  total                                 " << r.total << '\n'
      << "  inputs: L_l=" << r.inputs.loss_lipschitz << " L_loc=" << r.inputs.l_loc
      << " L_global=" << r.inputs.l_global << " L_true=" << r.inputs.l_true
      << " alpha=" << r.inputs.alpha_true << " c=" << r.inputs.c_true
      << " eps_X=" << r.inputs.eps_x << " eps_loc=" << r.inputs.eps_loc
      << " |F_loc|inf=" << r.inputs.sup_norm_local
      << " |F_glob|inf=" << r.inputs.sup_norm_global << " delta=" << r.inputs.delta
      << " N=" << r.inputs.n_retrieved << " r=" << r.inputs.radius
      << " rademacher=" << r.inputs.rademacher << '\n'
      << "  caveats: eps_X and eps_loc are caller declarations (unobservable,\n"
      << "  default 0); the rademacher input is a measured estimate.\n";
  return out.str();
}

void write_bound_report_csv(const BoundReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write bound report: " + path);
  out.precision(17);
  out << "term_i,term_ii,term_iii_rademacher,term_iii_deviation,term_iii_tail,total,"
      << "loss_lipschitz,l_loc,l_global,l_true,alpha_true,c_true,eps_x,eps_loc,"
      << "sup_norm_local,sup_norm_global,delta,n_retrieved,radius,rademacher\n";
  out << r.term_i << ',' << r.term_ii << ',' << r.term_iii_rademacher << ','
      << r.term_iii_deviation << ',' << r.term_iii_tail << ',' << r.total << ','
      << r.inputs.loss_lipschitz << ',' << r.inputs.l_loc << ',' << r.inputs.l_global << ','
      << r.inputs.l_true << ',' << r.inputs.alpha_true << ',' << r.inputs.c_true << ','
      << r.inputs.eps_x << ',' << r.inputs.eps_loc << ',' << r.inputs.sup_norm_local << ','
      << r.inputs.sup_norm_global << ',' << r.inputs.delta << ',' << r.inputs.n_retrieved << ','
      << r.inputs.radius << ',' << r.inputs.rademacher << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace locem
