#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nnmf/data.hpp"
#include "nnmf/factory.hpp"
#include "nnmf/model.hpp"
#include "nnmf/optimizer.hpp"

namespace nnmf {

// sqrt(mean((p - t)^2)); throws invalid_argument on empty or unequal input.
double rmse(std::span<const double> predictions, std::span<const double> targets);

// Clamps each prediction into [lo, hi].
void clamp_predictions(std::vector<double>& predictions, double lo, double hi);

struct ExperimentConfig {
  ModelConfig model;
  SplitSpec split;
  LambdaGrid grid = default_lambda_grid();
  TrainSchedule schedule;
  RmspropConfig rmsprop;
  std::uint64_t init_seed = 0;
  bool clamp_at_eval = false;
  int jobs = 1;
  std::string config_snapshot;  // copied verbatim into the report
};

struct RepeatResult {
  int repeat = 0;
  bool ok = false;
  std::string error;
  double test_rmse = 0.0;
  double lambda = 0.0;
  int stop_epoch = 0;
  double best_validation_rmse = 0.0;
  double wall_seconds = 0.0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::size_t test_size = 0;
};

struct ExperimentReport {
  ModelKind kind = ModelKind::nnmf;
  std::vector<RepeatResult> repeats;
  double mean_test_rmse = 0.0;    // over successful repeats
  double stddev_test_rmse = 0.0;  // sample standard deviation
  std::size_t n_succeeded = 0;
  std::string config_snapshot;
};

using ProgressFn = std::function<void(const std::string&)>;

// Seed used to initialize parameters for `repeat`.
std::uint64_t init_seed_for_repeat(std::uint64_t seed, int repeat);

// Fits one repeat: split, select lambda, evaluate test RMSE. Exposed so the
// CLI can run repeats separately.
RepeatResult run_repeat(const ObservationSet& data, const ExperimentConfig& config,
                        int repeat, const ProgressFn& progress = {});

// All repeats; failed repeats are kept with ok = false.
ExperimentReport run_experiment(const ObservationSet& data,
                                const ExperimentConfig& config,
                                const ProgressFn& progress = {});

// Recomputes mean, standard deviation and success count from `repeats`.
void summarize(ExperimentReport& report);

void write_report_csv(const ExperimentReport& report, std::ostream& out);
void write_report_table(const std::vector<ExperimentReport>& reports,
                        std::ostream& out);

}  // namespace nnmf
