#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nnmf/data.hpp"
#include "nnmf/evaluation.hpp"
#include "nnmf/factory.hpp"
#include "nnmf/optimizer.hpp"

namespace nnmf {

enum class DataFormat { movielens, edges, edges_square, canonical };

std::string_view to_string(DataFormat format);
DataFormat parse_data_format(std::string_view text);

// Everything a run needs, archived alongside its outputs.
//
//   [data]   path, format
//   [split]  test_fraction, validation_fraction, repeats
//   [model]  kind, d, d_prime, k, hidden, rank, ntn_hidden,
//            ntn_output_sigmoid, ntn_output_min, ntn_output_max, feature_std
//   [train]  lambda, lambda_grid, learning_rate, rmsprop_decay,
//            rmsprop_epsilon, network_steps, feature_steps, max_epochs,
//            patience, min_delta, repeat, jobs, clamp_at_eval
//   [run]    seed, out
//
// Only data.path is required.
struct RunConfig {
  std::string data_path;
  DataFormat data_format = DataFormat::movielens;

  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  int repeats = 5;

  ModelConfig model;

  double lambda = 0.0;  // single-run value for `train`
  LambdaGrid grid = default_lambda_grid();
  RmspropConfig rmsprop;
  TrainSchedule schedule;
  int repeat = 0;  // split used by train / sweep / evaluate
  int jobs = 1;
  bool clamp_at_eval = false;

  std::uint64_t seed = 1;
  std::string out_dir = "run";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Throws config errors naming the offending key.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string format_run_config(const RunConfig& config);

SplitSpec split_spec(const RunConfig& config);
ExperimentConfig experiment_config(const RunConfig& config);

ObservationSet load_dataset(const RunConfig& config);

}  // namespace nnmf
