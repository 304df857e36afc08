#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nnmf/data.hpp"
#include "nnmf/model.hpp"

namespace nnmf {

struct RmspropConfig {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;

  friend bool operator==(const RmspropConfig&, const RmspropConfig&) = default;
};

// Per-parameter running mean of squared gradients for one parameter block.
class RmspropState {
 public:
  RmspropState() = default;
  RmspropState(const ConstParamSpans& params, const RmspropConfig& config);

  const RmspropConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& mean_square() const { return mean_square_; }

  // s <- rho s + (1 - rho) g^2;  p <- p - eta g / sqrt(s + eps).
  // Throws numerical on a non-finite gradient before touching anything.
  void step(const ParamSpans& params, const std::vector<std::vector<double>>& grads);

 private:
  RmspropConfig config_;
  std::vector<std::vector<double>> mean_square_;
};

// p <- p - step * g, for the descent-property checks.
void gradient_descent_step(const ParamSpans& params,
                           const std::vector<std::vector<double>>& grads,
                           double step);

enum class StepRule { rmsprop, plain_gradient };

struct TrainSchedule {
  int network_steps = 1;  // full-batch steps per network phase
  int feature_steps = 1;  // full-batch steps per feature phase
  int max_epochs = 5000;
  int patience = 50;
  double min_delta = 1e-5;
  StepRule rule = StepRule::rmsprop;
  double plain_step = 1e-6;  // step size for StepRule::plain_gradient

  void validate() const;

  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double network_phase_objective = 0.0;  // objective before the network phase
  double feature_phase_objective = 0.0;  // objective before the feature phase
  double train_rmse = 0.0;
  double validation_rmse = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_validation_rmse = 0.0;
  std::string stop_reason;

  friend bool operator==(const TrainingTrace&, const TrainingTrace&) = default;
};

void write_trace_csv(const TrainingTrace& trace, std::ostream& out);

// Called around every phase; `after` is false before the step(s), true after.
struct PhaseEvent {
  int epoch = 0;
  Block block = Block::network;
  bool after = false;
  const Model* model = nullptr;
};
using PhaseObserver = std::function<void(const PhaseEvent&)>;

struct TrainResult {
  std::unique_ptr<Model> model;  // parameters from the best validation epoch
  TrainingTrace trace;
};

double rmse_on(const Model& model, const ObservationSet& obs);

// Alternating full-batch training; see TrainSchedule. Throws TrainingDiverged
// once the objective or validation error stops being finite.
TrainResult train(const Model& initial, const DataSplit& split, double lambda,
                  const TrainSchedule& schedule, const RmspropConfig& rmsprop,
                  const PhaseObserver& observer = {});

struct LambdaGrid {
  std::vector<double> values;

  void validate() const;  // non-empty, strictly increasing, all >= 0

  friend bool operator==(const LambdaGrid&, const LambdaGrid&) = default;
};

LambdaGrid default_lambda_grid();

struct LambdaRun {
  double lambda = 0.0;
  bool diverged = false;
  std::string error;
  double best_validation_rmse = 0.0;
  int best_epoch = 0;
  TrainingTrace trace;
};

struct LambdaSelection {
  double lambda = 0.0;
  std::unique_ptr<Model> model;
  TrainingTrace trace;
  std::vector<LambdaRun> runs;  // grid order
};

// Index of the winning run: lowest best-epoch validation RMSE among runs that
// did not diverge, ties to the later (larger lambda) entry. Returns
// runs.size() when every run diverged.
std::size_t pick_best(const std::vector<LambdaRun>& runs);

// One training run per grid value, each from a copy of `initial`. The lowest
// best-epoch validation RMSE wins; ties go to the larger lambda. Up to `jobs`
// runs execute concurrently; the outcome does not depend on `jobs`.
LambdaSelection select_lambda(const Model& initial, const DataSplit& split,
                              const LambdaGrid& grid,
                              const TrainSchedule& schedule,
                              const RmspropConfig& rmsprop, int jobs = 1);

void write_sweep_csv(const LambdaSelection& selection, std::ostream& out);

}  // namespace nnmf
