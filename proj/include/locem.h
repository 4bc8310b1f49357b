/* locem: retrieval-based classification library.
 *
 * C API over the C++ core. All objects are opaque handles created and
 * destroyed through these functions; every fallible call returns a
 * locem_status, with a thread-local message available via locem_last_error().
 * Handles are immutable after creation and safe to share across threads.
 */
#ifndef LOCEM_H
#define LOCEM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum locem_status {
  LOCEM_OK = 0,
  LOCEM_ERR_INVALID_ARGUMENT = 1, /* bad parameter or domain violation */
  LOCEM_ERR_IO = 2,               /* unreadable/unwritable file */
  LOCEM_ERR_CONFIG = 3,           /* malformed experiment configuration */
  LOCEM_ERR_NUMERIC = 4,          /* diverged optimization or failed solve */
  LOCEM_ERR_INTERNAL = 5
} locem_status;

const char* locem_status_name(locem_status status);

/* Message for the most recent failing call on this thread. */
const char* locem_last_error(void);

/* ---- datasets ---- */

typedef struct locem_dataset locem_dataset;

/* Loads .bin (binary dataset format) by extension, CSV otherwise. */
locem_status locem_dataset_load(const char* path, locem_dataset** out);
locem_status locem_dataset_create(const double* points_row_major, const uint32_t* labels,
                                  uint32_t rows, uint32_t dim, uint32_t num_classes,
                                  locem_dataset** out);
locem_status locem_dataset_save_csv(const locem_dataset* data, const char* path);
locem_status locem_dataset_save_binary(const locem_dataset* data, const char* path);
uint32_t locem_dataset_rows(const locem_dataset* data);
uint32_t locem_dataset_dim(const locem_dataset* data);
uint32_t locem_dataset_classes(const locem_dataset* data);
void locem_dataset_free(locem_dataset* data);

/* Gaussian mixture benchmark generator; writes the sidecar next to nothing
 * (callers persist via the save functions). */
locem_status locem_synthetic_generate(uint32_t clusters, uint32_t dim, double mean_low,
                                      double mean_high, uint64_t spec_seed, uint32_t n,
                                      uint64_t data_seed, locem_dataset** out);
locem_status locem_synthetic_write_sidecar(uint32_t clusters, uint32_t dim, double mean_low,
                                           double mean_high, uint64_t spec_seed, uint32_t n,
                                           uint64_t data_seed, const char* path);

/* ---- exact retrieval ---- */

typedef struct locem_index locem_index;

typedef enum locem_backend {
  LOCEM_BACKEND_BRUTE_FORCE = 0,
  LOCEM_BACKEND_VPTREE = 1
} locem_backend;

locem_status locem_index_build(const locem_dataset* data, locem_backend backend,
                               locem_index** out);
void locem_index_free(locem_index* index);

/* Two-call pattern: pass capacity 0 to learn the required size via out_count.
 * exclude_row < 0 disables self-exclusion. Results are sorted by distance,
 * ties by lower row index. */
locem_status locem_index_ball_query(const locem_index* index, const double* x, uint32_t dim,
                                    double radius, int64_t exclude_row, uint32_t* out_indices,
                                    double* out_distances, uint32_t capacity,
                                    uint32_t* out_count);
locem_status locem_index_knn_query(const locem_index* index, const double* x, uint32_t dim,
                                   uint32_t k, int64_t exclude_row, uint32_t* out_indices,
                                   double* out_distances, uint32_t capacity,
                                   uint32_t* out_count);

/* Empirical floor N(r, delta) on retrieved-set sizes, self-excluded. */
locem_status locem_estimate_retrieved_floor(const locem_dataset* data, const locem_index* index,
                                            double radius, double delta, uint32_t* out);

/* ---- per-query local ERM ---- */

/* local_config is flat key=value text using the same keys as experiment
 * configs (loss, l2, mlp.hidden, min_retrieved, opt.*, local.mode; the sweep
 * value comes from `radius` or `k`). */
locem_status locem_local_predict(const locem_dataset* train, const locem_index* index,
                                 const char* local_config, const double* x, uint32_t dim,
                                 int64_t exclude_row, uint32_t* out_class, double* out_scores,
                                 uint32_t scores_capacity, uint32_t* out_retrieved,
                                 int* out_used_fallback);

/* ---- experiment harness ---- */

/* Runs the experiment described by the config file and writes results.csv,
 * timings.csv, summary.txt and curves.svg into the configured (or overridden)
 * output directory. */
locem_status locem_run_experiment(const char* config_path, const char* output_dir_override);

/* Assembles the bound reports for the configured data into bounds.csv and
 * bounds.txt. */
locem_status locem_compute_bounds(const char* config_path, const char* output_dir_override);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LOCEM_H */
