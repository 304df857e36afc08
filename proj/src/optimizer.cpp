#include "nnmf/optimizer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "nnmf/error.hpp"
#include "nnmf/format.hpp"

namespace nnmf {

namespace {

void check_layout(const ParamSpans& params,
                  const std::vector<std::vector<double>>& grads) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::dimension, "gradient and parameter layouts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) {
      throw Error(ErrorCode::dimension, "gradient and parameter layouts differ");
    }
  }
}

void check_finite_block(const std::vector<std::vector<double>>& grads) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      if (!std::isfinite(grads[i][j])) {
        throw Error(ErrorCode::numerical, "non-finite gradient in tensor " +
                                              std::to_string(i) + " at entry " +
                                              std::to_string(j));
      }
    }
  }
}

}  // namespace

RmspropState::RmspropState(const ConstParamSpans& params,
                           const RmspropConfig& config)
    : config_(config), mean_square_(zeros_like(params)) {
  if (!(config.learning_rate > 0.0) || !(config.decay > 0.0 && config.decay < 1.0) ||
      !(config.epsilon > 0.0)) {
    throw Error(ErrorCode::invalid_argument,
                "RMSProp needs learning_rate > 0, decay in (0, 1), epsilon > 0");
  }
}

void RmspropState::step(const ParamSpans& params,
                        const std::vector<std::vector<double>>& grads) {
  check_layout(params, grads);
  if (mean_square_.size() != grads.size()) {
    throw Error(ErrorCode::dimension, "RMSProp state does not match parameters");
  }
  check_finite_block(grads);
  const double rho = config_.decay;
  const double eta = config_.learning_rate;
  const double eps = config_.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& s = mean_square_[i];
    const auto& g = grads[i];
    auto p = params[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      s[j] = rho * s[j] + (1.0 - rho) * g[j] * g[j];
      p[j] -= eta * g[j] / std::sqrt(s[j] + eps);
    }
  }
}

void gradient_descent_step(const ParamSpans& params,
                           const std::vector<std::vector<double>>& grads,
                           double step) {
  check_layout(params, grads);
  check_finite_block(grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= step * grads[i][j];
  }
}

void TrainSchedule::validate() const {
  if (network_steps < 1 || feature_steps < 1) {
    throw Error(ErrorCode::invalid_argument, "steps per phase must be >= 1");
  }
  if (max_epochs < 1 || patience < 1) {
    throw Error(ErrorCode::invalid_argument, "max_epochs and patience must be >= 1");
  }
  if (min_delta < 0.0) throw Error(ErrorCode::invalid_argument, "min_delta must be >= 0");
  if (rule == StepRule::plain_gradient && !(plain_step > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "plain gradient step must be positive");
  }
}

void write_trace_csv(const TrainingTrace& trace, std::ostream& out) {
  out << csv_row({"epoch", "network_phase_objective", "feature_phase_objective",
                  "train_rmse", "validation_rmse"});
  for (const auto& e : trace.epochs) {
    out << csv_row({std::to_string(e.epoch), format_real(e.network_phase_objective),
                    format_real(e.feature_phase_objective), format_real(e.train_rmse),
                    format_real(e.validation_rmse)});
  }
}

double rmse_on(const Model& model, const ObservationSet& obs) {
  if (obs.empty()) throw Error(ErrorCode::invalid_argument, "RMSE of an empty set");
  const auto pred = model.predict_all(obs);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - obs[i].value;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

TrainResult train(const Model& initial, const DataSplit& split, double lambda,
                  const TrainSchedule& schedule, const RmspropConfig& rmsprop,
                  const PhaseObserver& observer) {
  schedule.validate();
  if (lambda < 0.0) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  if (split.train.empty() || split.validation.empty()) {
    throw Error(ErrorCode::invalid_argument,
                "training needs non-empty train and validation sets");
  }
  initial.check_fits(split.train);
  initial.check_fits(split.validation);

  auto model = initial.clone();
  RmspropState network_rms(const_spans(model->parameters(Block::network)), rmsprop);
  RmspropState feature_rms(const_spans(model->parameters(Block::features)), rmsprop);
  const bool has_network = total_size(model->parameters(Block::network)) > 0;

  TrainResult result;
  auto& trace = result.trace;
  double best = std::numeric_limits<double>::infinity();
  double reference = best;  // last value that improved by at least min_delta
  int stale = 0;
  Gradient grad;

  const auto diverged = [&](int epoch, const std::string& why) {
    const int last = trace.epochs.empty() ? 0 : trace.epochs.back().epoch;
    return TrainingDiverged(last, "training diverged at epoch " +
                                      std::to_string(epoch) + ": " + why);
  };

  const auto run_phase = [&](int epoch, Block block, int steps,
                             RmspropState& rms) -> double {
    if (observer) observer({epoch, block, false, model.get()});
    double first = 0.0;
    for (int s = 0; s < steps; ++s) {
      double value = 0.0;
      try {
        value = model->backward(split.train, lambda, grad);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::numerical) throw;
        throw diverged(epoch, e.what());
      }
      if (!std::isfinite(value)) throw diverged(epoch, "objective is not finite");
      if (s == 0) first = value;
      if (schedule.rule == StepRule::rmsprop) {
        rms.step(model->parameters(block), grad.block(block));
      } else {
        gradient_descent_step(model->parameters(block), grad.block(block),
                              schedule.plain_step);
      }
    }
    if (observer) observer({epoch, block, true, model.get()});
    return first;
  };

  for (int epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    if (has_network) {
      rec.network_phase_objective =
          run_phase(epoch, Block::network, schedule.network_steps, network_rms);
    }
    rec.feature_phase_objective =
        run_phase(epoch, Block::features, schedule.feature_steps, feature_rms);
    if (!has_network) rec.network_phase_objective = rec.feature_phase_objective;
    rec.train_rmse = rmse_on(*model, split.train);
    rec.validation_rmse = rmse_on(*model, split.validation);
    if (!std::isfinite(rec.train_rmse) || !std::isfinite(rec.validation_rmse)) {
      throw diverged(epoch, "predictions are not finite");
    }
    trace.epochs.push_back(rec);

    if (rec.validation_rmse < best) {
      best = rec.validation_rmse;
      trace.best_epoch = epoch;
      trace.best_validation_rmse = best;
      result.model = model->clone();
    }
    if (rec.validation_rmse < reference - schedule.min_delta) {
      reference = rec.validation_rmse;
      stale = 0;
    } else if (++stale >= schedule.patience) {
      trace.stop_reason = "patience";
      break;
    }
  }
  if (trace.stop_reason.empty()) trace.stop_reason = "max_epochs";
  return result;
}

void LambdaGrid::validate() const {
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "lambda grid is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) {
      throw Error(ErrorCode::invalid_argument, "lambda values must be >= 0");
    }
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw Error(ErrorCode::invalid_argument,
                  "lambda grid must be strictly increasing");
    }
  }
}

LambdaGrid default_lambda_grid() {
  return {{0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0}};
}

std::size_t pick_best(const std::vector<LambdaRun>& runs) {
  const std::size_t n = runs.size();
  std::size_t best = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (runs[i].diverged) continue;
    // Grid is increasing, so `<=` hands ties to the larger lambda.
    if (best == n || runs[i].best_validation_rmse <= runs[best].best_validation_rmse) {
      best = i;
    }
  }
  return best;
}

LambdaSelection select_lambda(const Model& initial, const DataSplit& split,
                              const LambdaGrid& grid,
                              const TrainSchedule& schedule,
                              const RmspropConfig& rmsprop, int jobs) {
  grid.validate();
  schedule.validate();
  const std::size_t n = grid.values.size();
  std::vector<LambdaRun> runs(n);
  std::vector<std::unique_ptr<Model>> models(n);
  std::vector<std::exception_ptr> failures(n);

  const auto run_one = [&](std::size_t i) {
    runs[i].lambda = grid.values[i];
    try {
      auto r = train(initial, split, grid.values[i], schedule, rmsprop);
      runs[i].best_validation_rmse = r.trace.best_validation_rmse;
      runs[i].best_epoch = r.trace.best_epoch;
      runs[i].trace = std::move(r.trace);
      models[i] = std::move(r.model);
    } catch (const TrainingDiverged& e) {
      runs[i].diverged = true;
      runs[i].error = e.what();
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  const std::size_t best = pick_best(runs);
  if (best == n) {
    std::string detail;
    for (const auto& r : runs) detail += "\n  lambda=" + format_real(r.lambda) + ": " + r.error;
    throw Error(ErrorCode::all_runs_diverged,
                "every lambda in the grid diverged:" + detail);
  }
  LambdaSelection out;
  out.lambda = runs[best].lambda;
  out.model = std::move(models[best]);
  out.trace = runs[best].trace;
  out.runs = std::move(runs);
  return out;
}

void write_sweep_csv(const LambdaSelection& selection, std::ostream& out) {
  out << csv_row({"lambda", "status", "best_epoch", "best_validation_rmse", "selected"});
  for (const auto& r : selection.runs) {
    out << csv_row({format_real(r.lambda), r.diverged ? "diverged" : "ok",
                    std::to_string(r.best_epoch),
                    r.diverged ? "" : format_real(r.best_validation_rmse),
                    r.lambda == selection.lambda ? "1" : "0"});
  }
}

}  // namespace nnmf
