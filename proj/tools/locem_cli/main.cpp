// locem command line: synthetic data generation, experiment runs, bound
// reports, and single-query debugging. Talks to the library exclusively
// through the C API in locem.h.

#include "locem.h"

#include <CLI11.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace {

int report(locem_status status) {
  if (status == LOCEM_OK) return 0;
  std::fprintf(stderr, "locem: %s: %s\n", locem_status_name(status), locem_last_error());
  return 1;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retrieval-based classification toolkit"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a synthetic mixture dataset");
  uint32_t clusters = 100, dim = 10, n = 10000;
  double mean_low = -10.0, mean_high = 10.0;
  uint64_t seed = 0;
  std::string out_path = "data.csv";
  bool binary = false;
  gen->add_option("--clusters", clusters, "number of mixture clusters");
  gen->add_option("--dim", dim, "feature dimension");
  gen->add_option("--n", n, "number of samples");
  gen->add_option("--mean-low", mean_low, "cluster mean box lower bound");
  gen->add_option("--mean-high", mean_high, "cluster mean box upper bound");
  gen->add_option("--seed", seed, "master seed (spec and data streams derive from it)");
  gen->add_option("--out", out_path, "output path (.csv or .bin)");
  gen->add_flag("--binary", binary, "write the binary dataset format");

  // ---- run ----
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string run_config, run_output;
  run->add_option("-c,--config", run_config, "experiment config (key=value text)")->required();
  run->add_option("-o,--output", run_output, "override the configured output directory");

  // ---- bounds ----
  auto* bounds = app.add_subcommand("bounds", "assemble bound reports from a config file");
  std::string bounds_config, bounds_output;
  bounds->add_option("-c,--config", bounds_config, "bounds config (key=value text)")->required();
  bounds->add_option("-o,--output", bounds_output, "override the configured output directory");

  // ---- query ----
  auto* query = app.add_subcommand("query", "debug one prediction with a retrieved-set dump");
  std::string data_path, point_text, family = "linear", loss = "logistic", mode = "radius";
  double radius = 1.0, l2 = 1e-3;
  uint32_t k = 5, hidden = 16, min_retrieved = 2;
  int64_t exclude = -1;
  uint64_t query_seed = 0;
  query->add_option("--data", data_path, "dataset path (.csv or .bin)")->required();
  query->add_option("--point", point_text, "query point as comma-separated values")->required();
  query->add_option("--mode", mode, "retrieval mode: radius | topk");
  query->add_option("--radius", radius, "ball radius (radius mode)");
  query->add_option("--k", k, "neighbor count (topk mode)");
  query->add_option("--family", family, "local family: linear | mlp | kernel");
  query->add_option("--loss", loss, "surrogate loss: logistic | hinge | smoothed");
  query->add_option("--l2", l2, "local l2 penalty");
  query->add_option("--hidden", hidden, "mlp hidden width");
  query->add_option("--min-retrieved", min_retrieved, "fallback threshold");
  query->add_option("--exclude", exclude, "training row to exclude (self-exclusion)");
  query->add_option("--seed", query_seed, "optimizer seed");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    locem_dataset* data = nullptr;
    const uint64_t spec_seed = seed;
    const uint64_t data_seed = seed + 1;
    locem_status status = locem_synthetic_generate(clusters, dim, mean_low, mean_high, spec_seed,
                                                   n, data_seed, &data);
    if (status != LOCEM_OK) return report(status);
    status = binary ? locem_dataset_save_binary(data, out_path.c_str())
                    : locem_dataset_save_csv(data, out_path.c_str());
    locem_dataset_free(data);
    if (status != LOCEM_OK) return report(status);
    status = locem_synthetic_write_sidecar(clusters, dim, mean_low, mean_high, spec_seed, n,
                                           data_seed, (out_path + ".spec").c_str());
    if (status != LOCEM_OK) return report(status);
    std::printf("wrote %s and %s.spec (%u points, %u dims)\n", out_path.c_str(),
                out_path.c_str(), n, dim);
    return 0;
  }

  if (run->parsed()) {
    return report(locem_run_experiment(run_config.c_str(),
                                       run_output.empty() ? nullptr : run_output.c_str()));
  }

  if (bounds->parsed()) {
    return report(locem_compute_bounds(bounds_config.c_str(),
                                       bounds_output.empty() ? nullptr : bounds_output.c_str()));
  }

  // query
  locem_dataset* data = nullptr;
  locem_status status = locem_dataset_load(data_path.c_str(), &data);
  if (status != LOCEM_OK) return report(status);
  const std::vector<double> point = parse_point(point_text);
  if (point.size() != locem_dataset_dim(data)) {
    std::fprintf(stderr, "locem: query point has %zu values, dataset dimension is %u\n",
                 point.size(), locem_dataset_dim(data));
    locem_dataset_free(data);
    return 1;
  }
  locem_index* index = nullptr;
  status = locem_index_build(data, LOCEM_BACKEND_VPTREE, &index);
  if (status != LOCEM_OK) {
    locem_dataset_free(data);
    return report(status);
  }

  uint32_t count = 0;
  const auto dim32 = static_cast<uint32_t>(point.size());
  if (mode == "radius") {
    status = locem_index_ball_query(index, point.data(), dim32, radius, exclude, nullptr, nullptr,
                                    0, &count);
  } else {
    status = locem_index_knn_query(index, point.data(), dim32, k, exclude, nullptr, nullptr, 0,
                                   &count);
  }
  if (status != LOCEM_OK) {
    locem_index_free(index);
    locem_dataset_free(data);
    return report(status);
  }
  std::vector<uint32_t> indices(count);
  std::vector<double> distances(count);
  if (count > 0) {
    if (mode == "radius") {
      status = locem_index_ball_query(index, point.data(), dim32, radius, exclude, indices.data(),
                                      distances.data(), count, &count);
    } else {
      status = locem_index_knn_query(index, point.data(), dim32, k, exclude, indices.data(),
                                     distances.data(), count, &count);
    }
  }
  if (status != LOCEM_OK) {
    locem_index_free(index);
    locem_dataset_free(data);
    return report(status);
  }
  std::printf("retrieved %u neighbors (%s):\n", count,
              mode == "radius" ? "ball" : "knn");
  for (uint32_t i = 0; i < count; ++i)
    std::printf("  row=%u dist=%.6g\n", indices[i], distances[i]);

  std::ostringstream cfg;
  cfg << "local.mode=" << mode << "\nradius=" << radius << "\nk=" << k << "\nfamily=" << family
      << "\nloss=" << loss << "\nl2=" << l2 << "\nmlp.hidden=" << hidden
      << "\nmin_retrieved=" << min_retrieved << "\nseed=" << query_seed << "\n";
  uint32_t predicted = 0, retrieved = 0;
  int used_fallback = 0;
  std::vector<double> scores(locem_dataset_classes(data));
  status = locem_local_predict(data, index, cfg.str().c_str(), point.data(), dim32, exclude,
                               &predicted, scores.data(),
                               static_cast<uint32_t>(scores.size()), &retrieved, &used_fallback);
  locem_index_free(index);
  locem_dataset_free(data);
  if (status != LOCEM_OK) return report(status);
  std::printf("prediction: class=%u fallback=%s scores=[", predicted,
              used_fallback ? "yes" : "no");
  for (std::size_t c = 0; c < scores.size(); ++c)
    std::printf("%s%.6g", c ? ", " : "", scores[c]);
  std::printf("]\n");
  return 0;
}
