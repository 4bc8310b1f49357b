#pragma once

#include "locem/representation.hpp"
#include "locem/retrieval.hpp"
#include "locem/train.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace locem {

enum class RetrievalMode : std::uint8_t { radius, topk };
enum class FallbackKind : std::uint8_t { nearest_neighbor_label, global_scorer };

/// Per-query local learner: retrieve neighbors, minimize the retrieved-set
/// mean loss over a simple family, predict by argmax. Queries with fewer than
/// min_retrieved neighbors take the fallback path instead.
struct LocalErmConfig {
  RetrievalMode mode = RetrievalMode::radius;
  double radius = 1.0;
  std::uint32_t k = 5;
  FamilySpec family;
  LossSpec loss;
  double l2 = 1e-3;
  OptConfig opt;
  FallbackKind fallback = FallbackKind::nearest_neighbor_label;
  std::optional<Scorer> fallback_scorer;
  std::uint32_t min_retrieved = 2;
};

struct LocalPrediction {
  std::uint32_t predicted = 0;
  Vector scores;
  std::uint32_t retrieved_count = 0;
  bool used_fallback = false;
  std::optional<Scorer> local_scorer;  // present when a local fit happened
};

/// Fits the configured family on the retrieved rows only. Throws
/// InsufficientNeighbors when the set is smaller than min_retrieved.
Scorer local_fit(const RetrievedSet& retrieved, const Dataset& data,
                 const LocalErmConfig& config);

LocalPrediction local_predict(const Eigen::Ref<const Vector>& x, const RetrievalIndex& index,
                              const Dataset& data, const LocalErmConfig& config,
                              std::int64_t exclude_row = -1);

struct QueryDiagnostic {
  std::uint32_t query_id = 0;
  std::uint32_t retrieved_count = 0;
  bool used_fallback = false;
  std::uint32_t predicted = 0;
  std::uint32_t true_label = 0;
  bool correct = false;
};

struct LocalErmEvaluation {
  double accuracy = 0.0;
  double mean_retrieved = 0.0;
  double fallback_rate = 0.0;
  std::vector<QueryDiagnostic> diagnostics;
};

/// Accuracy of local_predict over the test set against an index built on the
/// training set. When exclude_matching_row is set, test row i is assumed to be
/// training row i and is excluded from its own retrieval (test == train case).
LocalErmEvaluation evaluate_local_erm(const Dataset& train, const Dataset& test,
                                      const LocalErmConfig& config,
                                      IndexBackend backend = IndexBackend::vantage_point_tree,
                                      bool exclude_matching_row = false);

void write_diagnostics_csv(const std::vector<QueryDiagnostic>& rows, const std::string& path);

/// Two-stage pipeline: a global feature map composed with local ERM. By
/// construction this is exactly local ERM run on the mapped dataset.
struct TwoStageModel {
  FeatureMap map;
  Dataset mapped_train;
  RetrievalIndex index;  // built over mapped_train
  LocalErmConfig config;
};

TwoStageModel compose_local(const Dataset& train, const FeatureMap& map,
                            const LocalErmConfig& config,
                            IndexBackend backend = IndexBackend::vantage_point_tree);

LocalPrediction two_stage_predict(const TwoStageModel& model, const Eigen::Ref<const Vector>& x,
                                  std::int64_t exclude_row = -1);

LocalErmEvaluation evaluate_two_stage(const TwoStageModel& model, const Dataset& test);

}  // namespace locem
