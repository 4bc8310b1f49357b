// Acceptance checklist for the library: ten end-to-end criteria, one
// PASS/FAIL line each. Exits nonzero if any criterion fails. The first
// argument is the path to the locem CLI binary (used by the determinism
// criterion); without it that criterion fails.

#include "locem/bounds.hpp"
#include "locem/extended_kernel.hpp"
#include "locem/harness.hpp"
#include "locem/local_erm.hpp"
#include "locem/retrieval.hpp"
#include "locem/rng.hpp"
#include "locem/synthetic.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace locem;

namespace {

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  g_outcomes.push_back({id, name, pass, detail});
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset random_dataset(std::uint32_t n, std::uint32_t d, std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix pts(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) pts(i, j) = gauss(engine);
  std::uniform_int_distribution<std::uint32_t> lab(0, 1);
  std::vector<std::uint32_t> ys(n);
  for (auto& y : ys) y = lab(engine);
  return Dataset(std::move(pts), std::move(ys), 2);
}

// ---- criterion 1: retrieval oracle equivalence ----
void criterion_retrieval() {
  const auto start = std::chrono::steady_clock::now();
  auto engine = make_engine(101);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> n_pick(1, 2000);
  std::uniform_int_distribution<int> d_pick(1, 16);
  std::size_t queries = 0, mismatches = 0;
  for (int round = 0; round < 8; ++round) {
    const int n = n_pick(engine), d = d_pick(engine);
    Matrix pts(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) pts(i, j) = gauss(engine);
    if (n > 2) pts.row(n - 1) = pts.row(0);  // duplicates stress tie handling
    const RetrievalIndex brute = RetrievalIndex::build(pts, IndexBackend::brute_force);
    const RetrievalIndex tree = RetrievalIndex::build(pts, IndexBackend::vantage_point_tree);
    std::uniform_real_distribution<double> rad(0.0, 4.0);
    std::uniform_int_distribution<std::uint32_t> kk(1, static_cast<std::uint32_t>(n));
    for (int q = 0; q < 70; ++q) {
      Vector x(d);
      for (int j = 0; j < d; ++j) x(j) = gauss(engine);
      const std::int64_t exclude = q % 4 == 0 ? q % n : -1;
      const double r = rad(engine);
      const RetrievedSet b1 = brute.ball_query(x, r, exclude);
      const RetrievedSet t1 = tree.ball_query(x, r, exclude);
      if (b1.indices != t1.indices || b1.distances != t1.distances) ++mismatches;
      const std::uint32_t k = kk(engine);
      const RetrievedSet b2 = brute.knn_query(x, k, exclude);
      const RetrievedSet t2 = tree.knn_query(x, k, exclude);
      if (b2.indices != t2.indices || b2.distances != t2.distances) ++mismatches;
      queries += 2;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << queries << " paired queries, " << mismatches << " mismatches, " << elapsed << " s";
  record(1, "retrieval oracle equivalence", mismatches == 0 && queries >= 1000 && elapsed < 30.0,
         detail.str());
}

// ---- criteria 2 and 3: synthetic tradeoff and capacity effect ----
void criterion_tradeoff_and_capacity() {
  const auto start = std::chrono::steady_clock::now();
  KeyValueConfig kv = KeyValueConfig::parse_string(
      "data = synthetic\n"
      "synthetic.clusters = 100\n"
      "synthetic.dim = 10\n"
      "synthetic.samples = 10000\n"
      "folds = 10\n"
      "seed = 1337\n"
      "sweep = 0.5, 2.5, 5.0, 8.0, 16.0\n"
      "methods = global_linear, local_linear, local_mlp\n"
      "mlp.hidden = 16\n"
      "opt.max_iters = 100\n"
      "l2 = 1e-3\n");
  ExperimentConfig ec = ExperimentConfig::from_config(kv);
  const auto dir = std::filesystem::temp_directory_path() / "locem_acceptance_tradeoff";
  std::filesystem::remove_all(dir);
  ec.output_dir = dir.string();
  const ResultTable table = run_experiment(ec);
  emit_reports(table, ec, ec.output_dir);
  const double elapsed = seconds_since(start);

  const std::size_t folds = 10, sweeps = 5;
  auto acc = [&](const std::string& method, std::size_t sweep_idx, std::size_t fold) {
    for (const auto& row : table.rows)
      if (row.method == method && row.fold == fold && row.sweep_value == ec.sweep[sweep_idx])
        return row.accuracy;
    return -1.0;
  };

  // criterion 2: per-fold interior max and >= 15pt gap over the global baseline
  std::size_t folds_ok = 0;
  double mean_gap = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::size_t best = 0;
    double best_acc = -1;
    for (std::size_t s = 0; s < sweeps; ++s)
      if (acc("local_linear", s, f) > best_acc) {
        best_acc = acc("local_linear", s, f);
        best = s;
      }
    const double gap = best_acc - acc("global_linear", 0, f);
    mean_gap += gap;
    if (best != 0 && best != sweeps - 1 && gap >= 0.15) ++folds_ok;
  }
  mean_gap /= folds;
  std::ostringstream d2;
  d2 << folds_ok << "/10 folds interior-peak with >=15pt gap, mean gap "
     << static_cast<int>(mean_gap * 1000) / 10.0 << "pt, " << elapsed << " s";
  record(2, "synthetic tradeoff (interior peak, gap over global)",
         folds_ok >= 8 && elapsed < 900.0, d2.str());

  // criterion 3: fold-mean (peak - last) smaller for the mlp family
  double lin_drop = 0, mlp_drop = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    double lin_peak = -1, mlp_peak = -1;
    for (std::size_t s = 0; s < sweeps; ++s) {
      lin_peak = std::max(lin_peak, acc("local_linear", s, f));
      mlp_peak = std::max(mlp_peak, acc("local_mlp", s, f));
    }
    lin_drop += lin_peak - acc("local_linear", sweeps - 1, f);
    mlp_drop += mlp_peak - acc("local_mlp", sweeps - 1, f);
  }
  lin_drop /= folds;
  mlp_drop /= folds;
  std::ostringstream d3;
  d3 << "fold-mean drop linear " << static_cast<int>(lin_drop * 1000) / 10.0 << "pt vs mlp "
     << static_cast<int>(mlp_drop * 1000) / 10.0 << "pt";
  record(3, "capacity effect (mlp degrades less at the largest radius)", mlp_drop < lin_drop,
         d3.str());
  std::filesystem::remove_all(dir);
}

// ---- criterion 4: M_r unit checks ----
void criterion_mr() {
  bool ok = compute_mr(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0) == 0.0;
  ok = ok && std::abs(compute_mr(1.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0) - 0.96) <= 1e-12;
  ok = ok && std::abs(compute_mr(3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0) - 6.0) <= 1e-12;
  double prev = -1;
  bool monotone = true;
  for (int i = 0; i <= 100; ++i) {
    // grid kept inside the nonvacuous weak-margin regime: c (2 L r)^a <= 1
    const double r = 0.007 * i;
    const double v = compute_mr(1.3, r, 1.0, 2.0, 0.7, 0.8, 1.1);
    monotone = monotone && v >= prev - 1e-15;
    prev = v;
  }
  record(4, "M_r hand values and monotone grid", ok && monotone,
         ok ? (monotone ? "exact values and 100-point grid" : "grid not monotone")
            : "hand values off");
}

// ---- criterion 5: extended-kernel algebra ----
void criterion_extended_algebra() {
  bool ok = true;
  std::ostringstream detail;
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    auto engine = make_engine(seed);
    std::uniform_int_distribution<std::uint32_t> n_pick(5, 50);
    const std::uint32_t n = n_pick(engine);
    const Dataset train = random_dataset(n, 4, seed * 31);
    const RetrievalIndex idx = RetrievalIndex::build(train);
    ExtendedKernelSpecs specs;
    specs.kx = KernelSpec::gaussian(1.5);
    specs.kz = KernelSpec::gaussian(1.0);
    specs.kappa = KernelSpec::gaussian(0.8);
    const ExtendedGram gram = build_extended_gram(train, idx, 2.0, specs);
    const double sym = (gram.kernel - gram.kernel.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.kernel);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double max_diag = gram.kernel.diagonal().maxCoeff();
    const double lambda = 1e-3;
    const ExtendedKernelModel model = train_extended(gram, train.labels(), 2, lambda);
    Matrix targets = Matrix::Constant(n, 2, -1.0);
    for (std::uint32_t i = 0; i < n; ++i) targets(i, train.label(i)) = 1.0;
    const Matrix system = gram.kernel + static_cast<double>(n) * lambda * Matrix::Identity(n, n);
    const Matrix oracle = Eigen::FullPivLU<Matrix>(system).solve(targets);
    const double solve_err = (model.alpha - oracle).cwiseAbs().maxCoeff();
    const Matrix expected_scores = gram.kernel * model.alpha;
    double repr_err = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto [label, scores] =
          predict_extended(model, train.point(i), idx, train, static_cast<std::int64_t>(i));
      (void)label;
      repr_err = std::max(
          repr_err, (scores.transpose() - expected_scores.row(i)).cwiseAbs().maxCoeff());
    }
    const bool round_ok =
        sym < 1e-10 && min_eig >= -1e-8 * max_diag && solve_err < 1e-10 && repr_err < 1e-10;
    ok = ok && round_ok;
    detail << "n=" << n << " solve=" << solve_err << " repr=" << repr_err << "; ";
  }
  record(5, "extended-kernel algebra (symmetry, PSD, solve, representer)", ok, detail.str());
}

// ---- criterion 6: extended-kernel utility ----
void criterion_extended_utility() {
  const auto start = std::chrono::steady_clock::now();
  KeyValueConfig kv = KeyValueConfig::parse_string(
      "data = synthetic\n"
      "synthetic.clusters = 20\n"
      "synthetic.dim = 10\n"
      "synthetic.samples = 3000\n"
      "folds = 10\n"
      "seed = 2024\n"
      "sweep = 3.0\n"
      "methods = global_linear, extended_kernel\n"
      "ek.kx_bandwidth = 3.0\n"
      "ek.kz_bandwidth = 3.0\n"
      "ek.kappa_bandwidth = 0.5\n"
      "ek.lambda = 1e-4\n"
      "opt.max_iters = 100\n");
  ExperimentConfig ec = ExperimentConfig::from_config(kv);
  const auto dir = std::filesystem::temp_directory_path() / "locem_acceptance_ek";
  std::filesystem::remove_all(dir);
  ec.output_dir = dir.string();
  const ResultTable table = run_experiment(ec);
  const double elapsed = seconds_since(start);
  double ek_mean = 0, global_mean = 0;
  for (const auto& row : table.rows) {
    if (row.method == "extended_kernel") ek_mean += row.accuracy;
    if (row.method == "global_linear") global_mean += row.accuracy;
  }
  ek_mean /= 10.0;
  global_mean /= 10.0;
  std::ostringstream detail;
  detail << "extended " << ek_mean << " vs global " << global_mean << ", " << elapsed << " s";
  record(6, "extended-kernel utility (fold-mean over global baseline)",
         ek_mean >= global_mean && elapsed < 600.0, detail.str());
  std::filesystem::remove_all(dir);
}

// ---- criterion 7: rademacher estimator ----
void criterion_rademacher() {
  auto engine = make_engine(71);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ok = true;
  std::ostringstream detail;
  // exhaustive m <= 12 equals independent closed-form enumeration to 1e-10
  for (int m : {1, 5, 9, 12}) {
    Matrix pts(m, 3);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < 3; ++j) pts(i, j) = gauss(engine);
    const double b = 1.3;
    const RademacherEstimate est = rademacher_linear_ball(pts, b, 0, 1);
    double oracle = 0;
    for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
      Vector sum = Vector::Zero(3);
      for (int i = 0; i < m; ++i) sum += ((mask >> i) & 1 ? 1.0 : -1.0) * pts.row(i).transpose();
      oracle += b * sum.norm() / m;
    }
    oracle /= static_cast<double>(1ull << m);
    if (!(est.exhaustive && std::abs(est.value - oracle) <= 1e-10)) ok = false;
  }
  // monte carlo at m = 200 within 3 standard errors of the closed-form mean,
  // itself estimated by an independent run with a disjoint seed
  Matrix big(200, 5);
  for (Eigen::Index i = 0; i < 200; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) big(i, j) = gauss(engine);
  const RademacherEstimate mc = rademacher_linear_ball(big, 1.0, 6000, 7);
  const RademacherEstimate ref = rademacher_linear_ball(big, 1.0, 6000, 7777);
  const double se = std::sqrt(mc.std_error * mc.std_error + ref.std_error * ref.std_error);
  const bool mc_ok = std::abs(mc.value - ref.value) <= 3.0 * se;
  detail << "mc " << mc.value << " vs ref " << ref.value << " (3se " << 3 * se << ")";
  record(7, "rademacher estimator (exhaustive exact, MC within 3 se)", ok && mc_ok, detail.str());
}

// ---- criterion 8: weak-margin fit ----
void criterion_weak_margin() {
  auto engine = make_engine(81);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> linear_cdf(10000), sqrt_cdf(10000);
  for (auto& v : linear_cdf) v = unif(engine);
  for (auto& v : sqrt_cdf) {
    const double u = unif(engine);
    v = u * u;
  }
  std::vector<double> grid;
  for (int i = 0; i < 15; ++i)
    grid.push_back(std::pow(10.0, -1.3 + 1.3 * static_cast<double>(i) / 14.0));
  const MarginFit f1 = fit_weak_margin(linear_cdf, grid);
  const MarginFit f2 = fit_weak_margin(sqrt_cdf, grid);
  bool dominate = true;
  std::vector<double> sorted = linear_cdf;
  std::sort(sorted.begin(), sorted.end());
  for (double t : grid) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    const double cdf = static_cast<double>(it - sorted.begin()) / 10000.0;
    dominate = dominate && f1.c * std::pow(t, f1.alpha) >= cdf - 1e-12;
  }
  std::ostringstream detail;
  detail << "alpha(t)=" << f1.alpha << " alpha(sqrt t)=" << f2.alpha;
  record(8, "weak-margin fit (alpha within 0.1, curve dominates CDF)",
         std::abs(f1.alpha - 1.0) < 0.1 && std::abs(f2.alpha - 0.5) < 0.1 && dominate,
         detail.str());
}

// ---- criterion 9: bound assemblies ----
void criterion_assemblies() {
  bool ok = true;
  // independent hand evaluation of the assembled local ERM bound
  BoundInputs in;
  in.loss_lipschitz = 1.0;
  in.l_loc = 1.0;
  in.l_global = 2.0;
  in.l_true = 1.0;
  in.alpha_true = 1.0;
  in.c_true = 0.5;
  in.eps_x = 0.01;
  in.eps_loc = 0.02;
  in.sup_norm_local = 1.0;
  in.sup_norm_global = 3.0;
  in.delta = 0.1;
  in.n_retrieved = 50;
  in.radius = 0.2;
  in.rademacher = 0.15;
  const BoundReport rep = assemble_local_erm_bound(in);
  const double mr_loc = 2.0 * (0.2 + (2.0 - 0.2) * 0.5 * 0.4);
  const double mr_glob = 2.0 * (0.4 + (6.0 - 0.4) * 0.5 * 0.4);
  const double ln4d = std::log(40.0);
  const double hand = 0.03 + mr_loc + mr_glob + 0.3 + 5.0 * mr_loc * std::sqrt(2 * ln4d / 50) +
                      4.0 * 0.1 * (2.0 + std::sqrt(2 * ln4d));
  ok = ok && std::abs(rep.total - hand) <= 1e-12;

  // hand values of the deviation terms
  ok = ok && std::abs(two_stage_deviation_term(1.0, 0.0, 1.0, 1.0, 2, std::exp(-1.0)) - 0.5) <= 1e-12;
  const double t2_hand = 2.0 / 10.0 * (1.0 + std::pow(std::log(std::sqrt(2.0) * 200.0), 1.5)) +
                         3.0 * std::sqrt(std::log(1000.0) / 50.0) +
                         4.0 * std::sqrt(std::log(10.0) / 100.0);
  ok = ok && std::abs(extended_deviation_bound(2.0, 3.0, 4.0, 100, 2, 50, 0.1) - t2_hand) <= 1e-12;

  // monotonicity: total nondecreasing in r and the eps terms, tail term
  // nondecreasing in the delta|F| factor, deviation term decreasing in N
  bool monotone = true;
  double prev_total = -1;
  for (double r = 0.0; r <= 0.4; r += 0.02) {
    BoundInputs b = in;
    b.radius = r;
    const double total = assemble_local_erm_bound(b).total;
    monotone = monotone && total >= prev_total - 1e-12;
    prev_total = total;
  }
  for (double eps = 0.0; eps <= 0.2; eps += 0.01) {
    BoundInputs b = in;
    b.eps_x = eps;
    b.eps_loc = eps;
    monotone = monotone && assemble_local_erm_bound(b).total >= rep.total - (0.03 + 1e-12);
  }
  double prev_tail = -1;
  for (double scale = 0.5; scale <= 3.0; scale += 0.25) {
    BoundInputs b = in;
    b.sup_norm_local = scale;
    const double tail = assemble_local_erm_bound(b).term_iii_tail;
    monotone = monotone && tail >= prev_tail - 1e-12;
    prev_tail = tail;
  }
  double prev_dev = 1e18;
  for (double n = 10; n <= 400; n *= 2) {
    BoundInputs b = in;
    b.n_retrieved = n;
    const double dev = assemble_local_erm_bound(b).term_iii_deviation;
    monotone = monotone && dev <= prev_dev + 1e-12;
    prev_dev = dev;
  }
  record(9, "bound assemblies (hand values to 1e-12, monotone grids)", ok && monotone,
         ok ? (monotone ? "hand values exact, grids monotone" : "monotonicity violated")
            : "hand values off");
}

// ---- criterion 10: CLI determinism ----
void criterion_determinism(const std::string& cli) {
  if (cli.empty()) {
    record(10, "CLI determinism", false, "no CLI path provided");
    return;
  }
  const auto dir = std::filesystem::temp_directory_path() / "locem_acceptance_det";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string cfg_path = (dir / "exp.cfg").string();
  {
    std::ofstream cfg(cfg_path);
    cfg << "data = synthetic\n"
        << "synthetic.clusters = 100\n"
        << "synthetic.dim = 10\n"
        << "synthetic.samples = 10000\n"
        << "folds = 10\n"
        << "seed = 7\n"
        << "sweep = 2.5, 5.0, 8.0\n"
        << "methods = global_linear, local_linear, two_stage, knn\n"
        << "two_stage.repr = pca\n"
        << "two_stage.components = 5\n"
        << "opt.max_iters = 80\n";
  }
  auto run_once = [&](const std::string& out) {
    std::ostringstream cmd;
    cmd << '"' << cli << "\" run -c \"" << cfg_path << "\" -o \"" << out << '"';
    return std::system(cmd.str().c_str());
  };
  const int rc1 = run_once((dir / "a").string());
  const int rc2 = run_once((dir / "b").string());
  const bool ran = rc1 == 0 && rc2 == 0;
  const bool results_same = read_file((dir / "a" / "results.csv").string()) ==
                            read_file((dir / "b" / "results.csv").string());
  const bool curves_same = read_file((dir / "a" / "curves.svg").string()) ==
                           read_file((dir / "b" / "curves.svg").string());
  std::ostringstream detail;
  detail << "exit codes " << rc1 << '/' << rc2 << ", results.csv "
         << (results_same ? "identical" : "differ") << ", curves.svg "
         << (curves_same ? "identical" : "differ");
  record(10, "CLI determinism (byte-identical results.csv and curves.svg)",
         ran && results_same && curves_same, detail.str());
  std::filesystem::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  criterion_retrieval();
  criterion_mr();
  criterion_rademacher();
  criterion_weak_margin();
  criterion_assemblies();
  criterion_extended_algebra();
  criterion_extended_utility();
  criterion_tradeoff_and_capacity();
  criterion_determinism(cli);

  std::size_t failed = 0;
  for (const auto& o : g_outcomes)
    if (!o.pass) ++failed;
  std::printf("acceptance: %zu/%zu criteria passed\n", g_outcomes.size() - failed,
              g_outcomes.size());
  return failed == 0 ? 0 : 1;
}
