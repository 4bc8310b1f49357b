#include "locem/local_erm.hpp"

#include "locem/threading.hpp"

#include <fstream>

namespace locem {

Scorer local_fit(const RetrievedSet& retrieved, const Dataset& data,
                 const LocalErmConfig& config) {
  if (config.min_retrieved == 0)
    throw std::invalid_argument("local fit: min_retrieved must be positive");
  if (retrieved.size() < config.min_retrieved)
    throw InsufficientNeighbors("local fit: retrieved set smaller than min_retrieved");
  Matrix xs(retrieved.size(), data.dim());
  std::vector<std::uint32_t> ys(retrieved.size());
  for (std::size_t i = 0; i < retrieved.size(); ++i) {
    xs.row(static_cast<Eigen::Index>(i)) = data.points().row(retrieved.indices[i]);
    ys[i] = data.label(retrieved.indices[i]);
  }
  return fit_scorer(xs, ys, data.num_classes(), config.family, config.loss, config.l2,
                    config.opt);
}

namespace {

RetrievedSet retrieve(const Eigen::Ref<const Vector>& x, const RetrievalIndex& index,
                      const LocalErmConfig& config, std::int64_t exclude_row) {
  if (config.mode == RetrievalMode::radius) {
    if (config.radius <= 0) throw std::invalid_argument("local erm: radius must be positive");
    return index.ball_query(x, config.radius, exclude_row);
  }
  if (config.k == 0) throw std::invalid_argument("local erm: k must be positive");
  return index.knn_query(x, config.k, exclude_row);
}

LocalPrediction fallback_predict(const Eigen::Ref<const Vector>& x, const RetrievalIndex& index,
                                 const Dataset& data, const LocalErmConfig& config,
                                 std::int64_t exclude_row, std::uint32_t retrieved_count) {
  LocalPrediction pred;
  pred.used_fallback = true;
  pred.retrieved_count = retrieved_count;
  if (config.fallback == FallbackKind::global_scorer) {
    if (!config.fallback_scorer) throw ConfigError("local erm: global fallback without a scorer");
    pred.scores = config.fallback_scorer->score(x);
    pred.predicted = argmax_lowest(pred.scores);
    return pred;
  }
  RetrievedSet nn = index.knn_query(x, 1, exclude_row);
  if (nn.empty()) nn = index.knn_query(x, 1);  // lone excluded point is better than nothing
  if (nn.empty()) throw std::domain_error("local erm: empty dataset");
  const std::uint32_t label = data.label(nn.indices[0]);
  pred.scores = Vector::Zero(data.num_classes());
  pred.scores(label) = 1.0;
  pred.predicted = label;
  return pred;
}

}  // namespace

LocalPrediction local_predict(const Eigen::Ref<const Vector>& x, const RetrievalIndex& index,
                              const Dataset& data, const LocalErmConfig& config,
                              std::int64_t exclude_row) {
  if (data.size() == 0) throw std::domain_error("local erm: empty dataset");
  RetrievedSet retrieved = retrieve(x, index, config, exclude_row);
  if (retrieved.size() < config.min_retrieved)
    return fallback_predict(x, index, data, config, exclude_row,
                            static_cast<std::uint32_t>(retrieved.size()));
  LocalPrediction pred;
  pred.retrieved_count = static_cast<std::uint32_t>(retrieved.size());
  pred.local_scorer = local_fit(retrieved, data, config);
  pred.scores = pred.local_scorer->score(x);
  pred.predicted = argmax_lowest(pred.scores);
  return pred;
}

LocalErmEvaluation evaluate_local_erm(const Dataset& train, const Dataset& test,
                                      const LocalErmConfig& config, IndexBackend backend,
                                      bool exclude_matching_row) {
  if (train.size() == 0 || test.size() == 0)
    throw std::domain_error("local erm evaluation: empty dataset");
  if (train.dim() != test.dim() || train.num_classes() != test.num_classes())
    throw std::domain_error("local erm evaluation: train/test shape mismatch");
  const RetrievalIndex index = RetrievalIndex::build(train, backend);
  LocalErmEvaluation eval;
  eval.diagnostics.resize(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    const std::int64_t exclude = exclude_matching_row ? static_cast<std::int64_t>(i) : -1;
    LocalPrediction pred = local_predict(test.point(i), index, train, config, exclude);
    QueryDiagnostic& diag = eval.diagnostics[i];
    diag.query_id = static_cast<std::uint32_t>(i);
    diag.retrieved_count = pred.retrieved_count;
    diag.used_fallback = pred.used_fallback;
    diag.predicted = pred.predicted;
    diag.true_label = test.label(i);
    diag.correct = pred.predicted == test.label(i);
  });
  double hits = 0, retrieved = 0, fallbacks = 0;
  for (const auto& diag : eval.diagnostics) {
    hits += diag.correct ? 1.0 : 0.0;
    retrieved += diag.retrieved_count;
    fallbacks += diag.used_fallback ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(test.size());
  eval.accuracy = hits / n;
  eval.mean_retrieved = retrieved / n;
  eval.fallback_rate = fallbacks / n;
  return eval;
}

void write_diagnostics_csv(const std::vector<QueryDiagnostic>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write diagnostics: " + path);
  out << "queryId,retrievedCount,usedFallback,predicted,trueLabel,correct\n";
  for (const auto& r : rows)
    out << r.query_id << ',' << r.retrieved_count << ',' << (r.used_fallback ? 1 : 0) << ','
        << r.predicted << ',' << r.true_label << ',' << (r.correct ? 1 : 0) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

TwoStageModel compose_local(const Dataset& train, const FeatureMap& map,
                            const LocalErmConfig& config, IndexBackend backend) {
  TwoStageModel model;
  model.map = map;
  model.mapped_train = map_dataset(map, train);
  model.index = RetrievalIndex::build(model.mapped_train, backend);
  model.config = config;
  return model;
}

LocalPrediction two_stage_predict(const TwoStageModel& model, const Eigen::Ref<const Vector>& x,
                                  std::int64_t exclude_row) {
  return local_predict(model.map.map(x), model.index, model.mapped_train, model.config,
                       exclude_row);
}

LocalErmEvaluation evaluate_two_stage(const TwoStageModel& model, const Dataset& test) {
  return evaluate_local_erm(model.mapped_train, map_dataset(model.map, test), model.config,
                            model.index.backend(), false);
}

}  // namespace locem
