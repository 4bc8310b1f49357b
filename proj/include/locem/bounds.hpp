#pragma once

#include "locem/dataset.hpp"
#include "locem/loss.hpp"
#include "locem/scorer.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace locem {

/// Sample-vs-neighborhood risk gap term:
///   M_r(L) = 2 L_l ( L r + (max{L r, 2 |F|_inf} - L r) c (2 L_true r)^alpha )
double compute_mr(double lipschitz, double radius, double loss_lipschitz, double sup_norm,
                  double c_true, double alpha_true, double l_true);

/// Weak margin condition fit: smallest-effort (alpha, c) with
/// c t^alpha >= empirical CDF of |margin| on every grid point. alpha comes
/// from a log-log least squares fit, c from pointwise inflation on top of it.
struct MarginFit {
  double alpha = 0.0;
  double c = 0.0;
  double residual = 0.0;  // RMS log-space fit error over the used grid points
  bool degenerate = false;  // CDF identically zero on the grid: alpha undefined
};

MarginFit fit_weak_margin(const std::vector<double>& margins, const std::vector<double>& grid);

struct RademacherEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for exhaustive enumeration
  bool exhaustive = false;
  bool lower_bound = false;  // sup found by ascent, not in closed form
};

/// Empirical Rademacher complexity of the linear ball {x -> <w,x> : |w| <= B}.
/// The inner sup is closed form (B |sum sigma_i x_i| / m); the sigma average is
/// exhaustive for m <= max_exhaustive, Monte Carlo otherwise.
RademacherEstimate rademacher_linear_ball(const Matrix& points, double ball_radius,
                                          std::uint32_t mc_draws, std::uint64_t seed,
                                          std::uint32_t max_exhaustive = 12);

/// Empirical Rademacher complexity of the centered loss class
/// {(x,y) -> l(margin_W(x,y)) - l(margin_W(anchor))} over the Frobenius ball
/// |W| <= B of linear scorers. The inner sup is nonconcave; it is estimated by
/// projected gradient ascent with restarts, so the result is a lower bound.
RademacherEstimate rademacher_loss_composed(const Matrix& points,
                                            const std::vector<std::uint32_t>& labels,
                                            const Vector& anchor_x, std::uint32_t anchor_y,
                                            std::uint32_t num_classes, double weight_bound,
                                            const LossSpec& loss, std::uint32_t mc_draws,
                                            std::uint32_t restarts, std::uint64_t seed);

/// Closed-form complexity terms for the supported local classes. The
/// universal constants in these expressions are not pinned by the analysis;
/// they default to 1, so the output is order-level only.
struct RkhsInfClass {
  double norm_bound = 1.0;  // B, l-inf sense
  std::uint32_t num_classes = 2;
};
struct RkhsL2Class {
  double norm_bound = 1.0;  // B, l-2 sense
  std::uint32_t num_classes = 2;
};
struct FeedForwardClass {
  std::vector<std::uint32_t> widths;    // d_1..d_L, last = num_classes
  std::vector<double> spectral_bounds;  // s_l
  std::vector<double> norm21_bounds;    // b_l
  double input_norm_bound = 1.0;        // max |x|_2
};
struct FunctionClassSpec {
  std::variant<RkhsInfClass, RkhsL2Class, FeedForwardClass> cls;
  double universal_constant = 1.0;
};

double class_complexity_bound(const FunctionClassSpec& spec, double loss_lipschitz,
                              double n_retrieved, double n, double delta);

/// Scalar inputs of the main excess-risk bound. eps_x / eps_loc reference
/// Bayes-optimal gaps and are unobservable: they are caller declarations
/// defaulting to 0, flagged in the rendered report.
struct BoundInputs {
  double loss_lipschitz = 1.0;
  double l_loc = 1.0;
  double l_global = 1.0;
  double l_true = 1.0;
  double alpha_true = 1.0;
  double c_true = 1.0;
  double eps_x = 0.0;
  double eps_loc = 0.0;
  double sup_norm_local = 1.0;
  double sup_norm_global = 1.0;
  double delta = 0.1;
  double n_retrieved = 1.0;  // N(r, delta)
  double radius = 1.0;
  double rademacher = 0.0;  // measured E[R(G(X,Y))]
};

struct BoundReport {
  double term_i = 0.0;                 // eps_x + eps_loc
  double term_ii = 0.0;                // M_r(local) + M_r(global)
  double term_iii_rademacher = 0.0;    // 2 R
  double term_iii_deviation = 0.0;     // 5 M_r(local) sqrt(2 ln(4/delta) / N)
  double term_iii_tail = 0.0;          // 4 delta L_l |F|_inf (2 + sqrt(2 ln(4/delta)))
  double total = 0.0;
  BoundInputs inputs;
};

BoundReport assemble_local_erm_bound(const BoundInputs& inputs);

/// Two-stage deviation term: (M_l + 2 Dhat L L_l1 m) sqrt(log(1/delta) / (2m)).
/// The data-dependent Rademacher expectation of the full statement is not
/// computed; this is the explicit deviation piece only.
double two_stage_deviation_term(double m_loss, double delta_hat, double lipschitz,
                      double loss_lipschitz_inf, std::uint32_t retrieved, double delta);

/// Extended-space uniform deviation with caller constants:
///   C1 n^{-1/2} (1 + log^{3/2}(sqrt(2) n |Y|)) + C2 sqrt(log(n/delta) / N)
///   + C3 sqrt(log(1/delta) / n)
/// where N is already evaluated at delta/n by the caller.
double extended_deviation_bound(double c1, double c2, double c3, std::uint32_t n,
                         std::uint32_t num_classes, double n_retrieved, double delta);

/// Empirical coordinate-Lipschitz probe: max over sampled pairs of
/// max_y |f_y(x1) - f_y(x2)| / |x1 - x2|. A lower bound on the true constant.
double empirical_coord_lipschitz(const Scorer& f, const Dataset& data, std::uint32_t pairs,
                                 std::uint64_t seed);

std::string format_bound_report(const BoundReport& report);
void write_bound_report_csv(const BoundReport& report, const std::string& path);

}  // namespace locem
