#pragma once

#include "locem/config.hpp"
#include "locem/dataset.hpp"
#include "locem/extended_kernel.hpp"
#include "locem/local_erm.hpp"
#include "locem/synthetic.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace locem {

enum class MethodKind : std::uint8_t { global_erm, local_erm, two_stage, extended_kernel, knn };

struct MethodSpec {
  MethodKind kind = MethodKind::global_erm;
  std::string name;
  FamilySpec family;         // global family or local family
  RetrievalMode mode = RetrievalMode::radius;
  FeatureMapSpec repr;       // two_stage first stage
  ExtendedKernelSpecs ek_specs;
  double ek_lambda = 1e-4;
  std::uint32_t knn_k = 1;
  bool uses_sweep = false;
};

struct ExperimentConfig {
  bool synthetic = true;
  std::string data_path;
  std::uint32_t clusters = 100;
  std::uint32_t dim = 10;
  std::uint32_t samples = 10000;
  double mean_low = -10.0;
  double mean_high = 10.0;

  std::vector<MethodSpec> methods;
  std::vector<double> sweep;
  std::uint32_t folds = 10;
  double holdout_fraction = 1.0 / 6.0;  // used when folds == 1
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  LossSpec loss;
  double l2 = 1e-3;
  OptConfig opt;
  std::uint32_t min_retrieved = 2;
  IndexBackend backend = IndexBackend::vantage_point_tree;
  bool select_best = false;
  bool emit_diagnostics = false;
  bool emit_histograms = false;
  std::string cache_dir;

  /// Reads the flat key=value schema (see README) into a config.
  static ExperimentConfig from_config(const KeyValueConfig& cfg);
};

struct ResultRow {
  std::string method;
  double sweep_value = 0.0;
  std::uint32_t fold = 0;
  double accuracy = 0.0;
  double mean_retrieved = 0.0;
  double fallback_rate = 0.0;
  double wall_clock_ms = 0.0;  // emitted to timings.csv, not results.csv
};

struct ResultTable {
  std::vector<ResultRow> rows;  // ordered by (method as configured, sweep, fold)
};

struct KnnEvaluation {
  double accuracy = 0.0;
  double mean_retrieved = 0.0;
};

/// Majority vote over the k nearest training rows; vote ties resolve to the
/// lowest class index.
KnnEvaluation evaluate_knn(const Dataset& train, const Dataset& test, std::uint32_t k,
                           IndexBackend backend = IndexBackend::vantage_point_tree);

/// Seeded shuffle then a near-equal partition; the union of test parts covers
/// [0, n) and parts are disjoint. folds == 1 degenerates to a single holdout
/// split of the given fraction.
std::vector<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>> cross_validate(
    std::size_t n, std::uint32_t folds, std::uint64_t seed, double holdout_fraction = 1.0 / 6.0);

/// Runs every configured method at every sweep value on every fold.
/// Deterministic given (config, seed); fold tasks execute on a work pool.
ResultTable run_experiment(const ExperimentConfig& config);

/// results.csv + timings.csv + summary.txt + curves.svg. Everything except
/// timings.csv is a pure function of the table.
void emit_reports(const ResultTable& table, const ExperimentConfig& config,
                  const std::string& output_dir);

ResultTable parse_result_table(const std::string& csv_path);

/// End-to-end `run` entry point used by the CLI: load config, run, emit.
void run_experiment_file(const std::string& config_path, const std::string& output_override = "");

/// `bounds` entry point: measures margin fit, N(r, delta), Rademacher and
/// sensitivity estimates on the configured data, assembles the bound reports,
/// and writes bounds.txt / bounds.csv.
void run_bounds_file(const std::string& config_path, const std::string& output_override = "");

}  // namespace locem
