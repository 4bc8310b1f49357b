#include "locem.h"

#include "locem/config.hpp"
#include "locem/harness.hpp"
#include "locem/local_erm.hpp"
#include "locem/retrieval.hpp"
#include "locem/rng.hpp"
#include "locem/synthetic.hpp"

#include <cstring>
#include <string>

namespace {

thread_local std::string g_last_error;

locem_status fail(locem_status status, const char* what) {
  g_last_error = what;
  return status;
}

template <typename Fn>
locem_status guarded(Fn&& fn) {
  try {
    fn();
    return LOCEM_OK;
  } catch (const std::invalid_argument& e) {
    return fail(LOCEM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(LOCEM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const locem::IoError& e) {
    return fail(LOCEM_ERR_IO, e.what());
  } catch (const locem::ConfigError& e) {
    return fail(LOCEM_ERR_CONFIG, e.what());
  } catch (const locem::NumericError& e) {
    return fail(LOCEM_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(LOCEM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LOCEM_ERR_INTERNAL, "unknown error");
  }
}

locem_status copy_retrieved(const locem::RetrievedSet& set, uint32_t* out_indices,
                            double* out_distances, uint32_t capacity, uint32_t* out_count) {
  if (out_count == nullptr)
    return fail(LOCEM_ERR_INVALID_ARGUMENT, "out_count must not be null");
  *out_count = static_cast<uint32_t>(set.size());
  if (capacity == 0) return LOCEM_OK;
  if (capacity < set.size())
    return fail(LOCEM_ERR_INVALID_ARGUMENT, "capacity smaller than result count");
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (out_indices) out_indices[i] = set.indices[i];
    if (out_distances) out_distances[i] = set.distances[i];
  }
  return LOCEM_OK;
}

}  // namespace

struct locem_dataset {
  locem::Dataset data;
};

struct locem_index {
  locem::RetrievalIndex index;
};

extern "C" {

const char* locem_status_name(locem_status status) {
  switch (status) {
    case LOCEM_OK:
      return "ok";
    case LOCEM_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case LOCEM_ERR_IO:
      return "io error";
    case LOCEM_ERR_CONFIG:
      return "config error";
    case LOCEM_ERR_NUMERIC:
      return "numeric error";
    case LOCEM_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* locem_last_error(void) { return g_last_error.c_str(); }

locem_status locem_dataset_load(const char* path, locem_dataset** out) {
  if (!path || !out) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new locem_dataset{locem::load_dataset(path)}; });
}

locem_status locem_dataset_create(const double* points_row_major, const uint32_t* labels,
                                  uint32_t rows, uint32_t dim, uint32_t num_classes,
                                  locem_dataset** out) {
  if (!out || (rows > 0 && (!points_row_major || !labels)))
    return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    locem::Matrix pts(rows, dim);
    for (uint32_t i = 0; i < rows; ++i)
      for (uint32_t j = 0; j < dim; ++j) pts(i, j) = points_row_major[std::size_t(i) * dim + j];
    std::vector<uint32_t> labs(labels, labels + rows);
    *out = new locem_dataset{locem::Dataset(std::move(pts), std::move(labs), num_classes)};
  });
}

locem_status locem_dataset_save_csv(const locem_dataset* data, const char* path) {
  if (!data || !path) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { locem::save_dataset_csv(data->data, path); });
}

locem_status locem_dataset_save_binary(const locem_dataset* data, const char* path) {
  if (!data || !path) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { locem::save_dataset_binary(data->data, path); });
}

uint32_t locem_dataset_rows(const locem_dataset* data) {
  return data ? static_cast<uint32_t>(data->data.size()) : 0;
}

uint32_t locem_dataset_dim(const locem_dataset* data) {
  return data ? static_cast<uint32_t>(data->data.dim()) : 0;
}

uint32_t locem_dataset_classes(const locem_dataset* data) {
  return data ? data->data.num_classes() : 0;
}

void locem_dataset_free(locem_dataset* data) { delete data; }

locem_status locem_synthetic_generate(uint32_t clusters, uint32_t dim, double mean_low,
                                      double mean_high, uint64_t spec_seed, uint32_t n,
                                      uint64_t data_seed, locem_dataset** out) {
  if (!out) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const locem::MixtureSpec spec =
        locem::sample_mixture_spec(clusters, dim, mean_low, mean_high, spec_seed);
    *out = new locem_dataset{locem::sample_dataset(spec, n, data_seed).data};
  });
}

locem_status locem_synthetic_write_sidecar(uint32_t clusters, uint32_t dim, double mean_low,
                                           double mean_high, uint64_t spec_seed, uint32_t n,
                                           uint64_t data_seed, const char* path) {
  if (!path) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const locem::MixtureSpec spec =
        locem::sample_mixture_spec(clusters, dim, mean_low, mean_high, spec_seed);
    locem::write_spec_sidecar(spec, n, data_seed, path);
  });
}

locem_status locem_index_build(const locem_dataset* data, locem_backend backend,
                               locem_index** out) {
  if (!data || !out) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto kind = backend == LOCEM_BACKEND_BRUTE_FORCE
                          ? locem::IndexBackend::brute_force
                          : locem::IndexBackend::vantage_point_tree;
    *out = new locem_index{locem::RetrievalIndex::build(data->data, kind)};
  });
}

void locem_index_free(locem_index* index) { delete index; }

locem_status locem_index_ball_query(const locem_index* index, const double* x, uint32_t dim,
                                    double radius, int64_t exclude_row, uint32_t* out_indices,
                                    double* out_distances, uint32_t capacity,
                                    uint32_t* out_count) {
  if (!index || !x) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  locem_status status = LOCEM_OK;
  locem_status guard = guarded([&] {
    const locem::RetrievedSet set =
        index->index.ball_query(Eigen::Map<const locem::Vector>(x, dim), radius, exclude_row);
    status = copy_retrieved(set, out_indices, out_distances, capacity, out_count);
  });
  return guard != LOCEM_OK ? guard : status;
}

locem_status locem_index_knn_query(const locem_index* index, const double* x, uint32_t dim,
                                   uint32_t k, int64_t exclude_row, uint32_t* out_indices,
                                   double* out_distances, uint32_t capacity,
                                   uint32_t* out_count) {
  if (!index || !x) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  locem_status status = LOCEM_OK;
  locem_status guard = guarded([&] {
    const locem::RetrievedSet set =
        index->index.knn_query(Eigen::Map<const locem::Vector>(x, dim), k, exclude_row);
    status = copy_retrieved(set, out_indices, out_distances, capacity, out_count);
  });
  return guard != LOCEM_OK ? guard : status;
}

locem_status locem_estimate_retrieved_floor(const locem_dataset* data, const locem_index* index,
                                            double radius, double delta, uint32_t* out) {
  if (!data || !index || !out) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded(
      [&] { *out = locem::estimate_retrieved_floor(data->data, index->index, radius, delta); });
}

locem_status locem_local_predict(const locem_dataset* train, const locem_index* index,
                                 const char* local_config, const double* x, uint32_t dim,
                                 int64_t exclude_row, uint32_t* out_class, double* out_scores,
                                 uint32_t scores_capacity, uint32_t* out_retrieved,
                                 int* out_used_fallback) {
  if (!train || !index || !local_config || !x || !out_class)
    return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const locem::KeyValueConfig cfg = locem::KeyValueConfig::parse_string(local_config);
    locem::LocalErmConfig lc;
    const std::string mode = cfg.get("local.mode", "radius");
    if (mode == "radius") {
      lc.mode = locem::RetrievalMode::radius;
      lc.radius = cfg.get_double("radius", 1.0);
    } else if (mode == "topk") {
      lc.mode = locem::RetrievalMode::topk;
      lc.k = static_cast<uint32_t>(cfg.get_uint("k", 5));
    } else {
      throw locem::ConfigError("unknown local.mode: " + mode);
    }
    const std::string family = cfg.get("family", "linear");
    if (family == "linear") {
      lc.family = locem::FamilySpec::linear();
    } else if (family == "mlp") {
      lc.family = locem::FamilySpec::mlp(static_cast<uint32_t>(cfg.get_uint("mlp.hidden", 16)));
    } else if (family == "kernel") {
      lc.family = locem::FamilySpec::kernel_machine(
          locem::KernelSpec::gaussian(cfg.get_double("local.kernel_bandwidth", 2.0)));
    } else {
      throw locem::ConfigError("unknown family: " + family);
    }
    const std::string loss = cfg.get("loss", "logistic");
    if (loss == "logistic") {
      lc.loss = locem::LossSpec::logistic();
    } else if (loss == "hinge") {
      lc.loss = locem::LossSpec::hinge(cfg.get_double("loss.margin_target", 1.0));
    } else if (loss == "smoothed") {
      lc.loss = locem::LossSpec::smoothed(cfg.get_double("loss.temperature", 0.1));
    } else {
      throw locem::ConfigError("unknown loss: " + loss);
    }
    lc.l2 = cfg.get_double("l2", 1e-3);
    lc.opt.max_iters = static_cast<uint32_t>(cfg.get_uint("opt.max_iters", 150));
    lc.opt.step = cfg.get_double("opt.step", 1.0);
    lc.opt.seed = cfg.get_uint("seed", 0);
    lc.min_retrieved = static_cast<uint32_t>(cfg.get_uint("min_retrieved", 2));
    const locem::LocalPrediction pred = locem::local_predict(
        Eigen::Map<const locem::Vector>(x, dim), index->index, train->data, lc, exclude_row);
    *out_class = pred.predicted;
    if (out_retrieved) *out_retrieved = pred.retrieved_count;
    if (out_used_fallback) *out_used_fallback = pred.used_fallback ? 1 : 0;
    if (out_scores) {
      if (scores_capacity < train->data.num_classes())
        throw std::invalid_argument("scores capacity smaller than class count");
      for (uint32_t c = 0; c < train->data.num_classes(); ++c) out_scores[c] = pred.scores(c);
    }
  });
}

locem_status locem_run_experiment(const char* config_path, const char* output_dir_override) {
  if (!config_path) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    locem::run_experiment_file(config_path, output_dir_override ? output_dir_override : "");
  });
}

locem_status locem_compute_bounds(const char* config_path, const char* output_dir_override) {
  if (!config_path) return fail(LOCEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    locem::run_bounds_file(config_path, output_dir_override ? output_dir_override : "");
  });
}

}  // extern "C"
