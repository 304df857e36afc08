#include "nnmf/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "nnmf/error.hpp"
#include "nnmf/format.hpp"

namespace nnmf {

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    throw Error(ErrorCode::invalid_argument,
                "RMSE needs equal, non-zero lengths (got " +
                    std::to_string(predictions.size()) + " and " +
                    std::to_string(targets.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

void clamp_predictions(std::vector<double>& predictions, double lo, double hi) {
  for (double& p : predictions) p = std::clamp(p, lo, hi);
}

std::uint64_t init_seed_for_repeat(std::uint64_t seed, int repeat) {
  // Offset keeps initialization streams apart from the split streams.
  return derive_seed(seed, 0x1000000ULL + static_cast<std::uint64_t>(repeat));
}

namespace {

void assert_no_test_leak(const DataSplit& split) {
  const std::unordered_set<std::size_t> test(split.test_indices.begin(),
                                             split.test_indices.end());
  for (const auto* part : {&split.train_indices, &split.validation_indices}) {
    for (auto i : *part) {
      if (test.count(i)) {
        throw Error(ErrorCode::invalid_argument,
                    "test observation " + std::to_string(i) +
                        " found in the fitting data");
      }
    }
  }
}

}  // namespace

RepeatResult run_repeat(const ObservationSet& data, const ExperimentConfig& config,
                        int repeat, const ProgressFn& progress) {
  RepeatResult out;
  out.repeat = repeat;
  const auto start = std::chrono::steady_clock::now();
  try {
    const DataSplit split = make_split(data, config.split, repeat);
    assert_no_test_leak(split);
    out.train_size = split.train.size();
    out.validation_size = split.validation.size();
    out.test_size = split.test.size();

    const auto initial =
        make_model(config.model, data.n_rows(), data.n_cols(), split.train.mean_value(),
                   init_seed_for_repeat(config.init_seed, repeat));
    auto selection = select_lambda(*initial, split, config.grid, config.schedule,
                                   config.rmsprop, config.jobs);
    auto predictions = selection.model->predict_all(split.test);
    if (config.clamp_at_eval) {
      clamp_predictions(predictions, split.train.min_value(), split.train.max_value());
    }
    std::vector<double> targets;
    targets.reserve(split.test.size());
    for (const auto& t : split.test.triples()) targets.push_back(t.value);

    out.test_rmse = rmse(predictions, targets);
    out.lambda = selection.lambda;
    out.stop_epoch = selection.trace.best_epoch;
    out.best_validation_rmse = selection.trace.best_validation_rmse;
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (progress) {
    char line[256];
    if (out.ok) {
      std::snprintf(line, sizeof line,
                    "repeat %d: test RMSE %.5f (lambda %s, epoch %d, %.1fs)", repeat,
                    out.test_rmse, format_real(out.lambda).c_str(), out.stop_epoch,
                    out.wall_seconds);
    } else {
      std::snprintf(line, sizeof line, "repeat %d: FAILED", repeat);
    }
    progress(out.ok ? std::string(line) : std::string(line) + " " + out.error);
  }
  return out;
}

void summarize(ExperimentReport& report) {
  std::vector<double> ok;
  for (const auto& r : report.repeats) {
    if (r.ok) ok.push_back(r.test_rmse);
  }
  report.n_succeeded = ok.size();
  report.mean_test_rmse = 0.0;
  report.stddev_test_rmse = 0.0;
  if (ok.empty()) return;
  double sum = 0.0;
  for (double v : ok) sum += v;
  report.mean_test_rmse = sum / static_cast<double>(ok.size());
  if (ok.size() > 1) {
    double ss = 0.0;
    for (double v : ok) ss += (v - report.mean_test_rmse) * (v - report.mean_test_rmse);
    report.stddev_test_rmse = std::sqrt(ss / static_cast<double>(ok.size() - 1));
  }
}

ExperimentReport run_experiment(const ObservationSet& data,
                                const ExperimentConfig& config,
                                const ProgressFn& progress) {
  config.split.validate();
  config.grid.validate();
  config.schedule.validate();
  ExperimentReport report;
  report.kind = config.model.kind;
  report.config_snapshot = config.config_snapshot;
  for (int r = 0; r < config.split.n_repeats; ++r) {
    report.repeats.push_back(run_repeat(data, config, r, progress));
  }
  summarize(report);
  return report;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << csv_row({"model", "repeat", "status", "lambda", "stop_epoch",
                  "best_validation_rmse", "test_rmse", "train_size",
                  "validation_size", "test_size", "wall_seconds", "error"});
  const std::string kind(to_string(report.kind));
  for (const auto& r : report.repeats) {
    out << csv_row({kind, std::to_string(r.repeat), r.ok ? "ok" : "failed",
                    r.ok ? format_real(r.lambda) : "",
                    r.ok ? std::to_string(r.stop_epoch) : "",
                    r.ok ? format_real(r.best_validation_rmse) : "",
                    r.ok ? format_real(r.test_rmse) : "", std::to_string(r.train_size),
                    std::to_string(r.validation_size), std::to_string(r.test_size),
                    format_real(r.wall_seconds), r.error});
  }
  out << csv_row({kind, "mean", report.n_succeeded == report.repeats.size() ? "ok" : "partial",
                  "", "", "", format_real(report.mean_test_rmse), "", "", "", "", ""});
  out << csv_row({kind, "stddev", "", "", "", "", format_real(report.stddev_test_rmse),
                  "", "", "", "", ""});
}

void write_report_table(const std::vector<ExperimentReport>& reports,
                        std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %8s %8s %6s  %s\n", "model", "mean", "std",
                "ok", "per-repeat test RMSE");
  out << line;
  for (const auto& rep : reports) {
    std::string per;
    for (const auto& r : rep.repeats) {
      char cell[32];
      if (r.ok) {
        std::snprintf(cell, sizeof cell, "%.4f ", r.test_rmse);
      } else {
        std::snprintf(cell, sizeof cell, "FAIL ");
      }
      per += cell;
    }
    std::snprintf(line, sizeof line, "%-10s %8.4f %8.4f %3zu/%-2zu  %s\n",
                  std::string(to_string(rep.kind)).c_str(), rep.mean_test_rmse,
                  rep.stddev_test_rmse, rep.n_succeeded, rep.repeats.size(), per.c_str());
    out << line;
  }
}

}  // namespace nnmf
