#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nnmf/baselines.hpp"
#include "nnmf/error.hpp"
#include "nnmf/factory.hpp"
#include "nnmf/optimizer.hpp"
#include "test_util.hpp"

using namespace nnmf;

namespace {

DataSplit split_of(const ObservationSet& data, std::uint64_t seed) {
  return make_split(data, {0.2, 0.2, 1, seed}, 0);
}

// Train and validate on the same cells, for memorization checks.
DataSplit same_cells(const ObservationSet& data) {
  DataSplit s{data, data, ObservationSet(data.n_rows(), data.n_cols(), {}), {}, {}, {}};
  return s;
}

TrainSchedule short_schedule(int epochs) {
  TrainSchedule s;
  s.max_epochs = epochs;
  s.patience = epochs;
  return s;
}

}  // namespace

TEST_CASE("rmsprop: one step from a fresh state") {
  std::vector<double> p{0.0};
  RmspropState rms({std::span<const double>(p)}, {0.001, 0.9, 1e-8});
  rms.step({std::span<double>(p)}, {{1.0}});
  CHECK(rms.mean_square()[0][0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(-0.003162277502054508).epsilon(1e-14));
}

TEST_CASE("rmsprop: zero gradient leaves parameters alone") {
  std::vector<double> p{1.5, -2.0};
  RmspropState rms({std::span<const double>(p)}, {});
  rms.step({std::span<double>(p)}, {{1.0, 0.0}});
  const double kept = p[1];
  const double s_before = rms.mean_square()[0][1];
  rms.step({std::span<double>(p)}, {{0.0, 0.0}});
  CHECK(p[1] == kept);
  CHECK(rms.mean_square()[0][1] == 0.9 * s_before);
}

TEST_CASE("rmsprop: constant gradient drives s to g^2") {
  std::vector<double> p{0.0};
  RmspropState rms({std::span<const double>(p)}, {0.001, 0.9, 1e-8});
  for (int i = 0; i < 400; ++i) rms.step({std::span<double>(p)}, {{3.0}});
  CHECK(rms.mean_square()[0][0] == doctest::Approx(9.0).epsilon(1e-12));
  // At the fixed point each step moves by eta * g / sqrt(g^2 + eps) ~ eta.
  const double before = p[0];
  rms.step({std::span<double>(p)}, {{3.0}});
  CHECK(before - p[0] == doctest::Approx(0.001).epsilon(1e-8));
}

TEST_CASE("rmsprop: invalid config and bad gradients") {
  std::vector<double> p{0.0};
  CHECK_THROWS_AS(RmspropState({std::span<const double>(p)}, {0.0, 0.9, 1e-8}), Error);
  CHECK_THROWS_AS(RmspropState({std::span<const double>(p)}, {0.1, 1.0, 1e-8}), Error);
  RmspropState rms({std::span<const double>(p)}, {});
  CHECK_THROWS_AS(rms.step({std::span<double>(p)}, {{NAN}}), Error);
  CHECK(p[0] == 0.0);
  CHECK_THROWS_AS(rms.step({std::span<double>(p)}, {{1.0, 2.0}}), Error);
}

TEST_CASE("train: the idle block is bit-frozen during each phase") {
  for (ModelKind kind : {ModelKind::nnmf, ModelKind::biased_mf, ModelKind::ntn}) {
    CAPTURE(to_string(kind));
    const auto data = testing::random_observations(6, 6, 0.9, 1);
    auto model = make_model(testing::tiny_config(kind), 6, 6, 0.0, 1);
    std::vector<std::vector<double>> idle;
    int checked = 0;
    bool frozen = true;
    const auto observer = [&](const PhaseEvent& e) {
      const Block other = e.block == Block::network ? Block::features : Block::network;
      if (!e.after) {
        idle = testing::snapshot(*e.model, other);
      } else {
        frozen = frozen && testing::bit_equal(idle, testing::snapshot(*e.model, other));
        ++checked;
      }
    };
    TrainSchedule s = short_schedule(5);
    s.network_steps = 3;
    s.feature_steps = 2;
    train(*model, split_of(data, 1), 0.1, s, {}, observer);
    CHECK(checked == 10);
    CHECK(frozen);
  }
}

TEST_CASE("train: pmf skips the network phase") {
  const auto data = testing::random_observations(6, 6, 0.9, 2);
  auto model = make_model(testing::tiny_config(ModelKind::pmf), 6, 6, 0.0, 2);
  int network_phases = 0;
  const auto observer = [&](const PhaseEvent& e) { network_phases += e.block == Block::network; };
  const auto r = train(*model, split_of(data, 2), 0.1, short_schedule(4), {}, observer);
  CHECK(network_phases == 0);
  for (const auto& e : r.trace.epochs) CHECK(e.network_phase_objective == e.feature_phase_objective);
}

TEST_CASE("train: small plain gradient steps never increase the objective") {
  for (ModelKind kind : {ModelKind::nnmf, ModelKind::pmf, ModelKind::biased_mf, ModelKind::ntn}) {
    CAPTURE(to_string(kind));
    const auto data = testing::random_observations(5, 5, 0.9, 3);
    auto model = make_model(testing::tiny_config(kind), 5, 5, 0.0, 3);
    auto s = short_schedule(100);
    s.rule = StepRule::plain_gradient;
    s.plain_step = 1e-6;
    const auto r = train(*model, split_of(data, 3), 0.05, s, {});
    REQUIRE(r.trace.epochs.size() == 100);
    double last = INFINITY;
    for (const auto& e : r.trace.epochs) {
      CHECK(e.network_phase_objective <= last);
      CHECK(e.feature_phase_objective <= e.network_phase_objective);
      last = e.feature_phase_objective;
    }
    CHECK(r.trace.epochs.back().feature_phase_objective < r.trace.epochs.front().network_phase_objective);
  }
}

TEST_CASE("train: identical inputs give bit-identical results") {
  const auto data = testing::random_observations(8, 7, 0.8, 4);
  const auto split = split_of(data, 4);
  auto model = make_model(testing::tiny_config(ModelKind::nnmf), 8, 7, 0.0, 4);
  const auto a = train(*model, split, 0.1, short_schedule(30), {0.01, 0.9, 1e-8});
  const auto b = train(*model, split, 0.1, short_schedule(30), {0.01, 0.9, 1e-8});
  CHECK(a.trace == b.trace);
  CHECK(testing::bit_equal(testing::snapshot(*a.model, Block::network),
                           testing::snapshot(*b.model, Block::network)));
  CHECK(testing::bit_equal(testing::snapshot(*a.model, Block::features),
                           testing::snapshot(*b.model, Block::features)));
  std::ostringstream ta, tb;
  write_trace_csv(a.trace, ta);
  write_trace_csv(b.trace, tb);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("train: returns the best validation epoch") {
  const auto data = testing::random_observations(10, 10, 0.8, 5);
  const auto split = split_of(data, 5);
  auto model = make_model(testing::tiny_config(ModelKind::nnmf), 10, 10, 0.0, 5);
  // A large rate and lambda = 0 overfit, so validation error turns upward.
  auto s = short_schedule(300);
  s.patience = 20;
  const auto r = train(*model, split, 0.0, s, {0.05, 0.9, 1e-8});
  double best = INFINITY;
  int arg = 0;
  for (const auto& e : r.trace.epochs) {
    if (e.validation_rmse < best) {
      best = e.validation_rmse;
      arg = e.epoch;
    }
  }
  CHECK(r.trace.best_epoch == arg);
  CHECK(r.trace.best_validation_rmse == best);
  CHECK(rmse_on(*r.model, split.validation) == best);
  if (r.trace.stop_reason == "patience") {
    CHECK(r.trace.epochs.size() >= static_cast<std::size_t>(arg + s.patience) - 1);
  }
}

TEST_CASE("train: early stopping respects patience and min_delta") {
  const auto data = testing::random_observations(6, 6, 0.9, 6);
  auto model = make_model(testing::tiny_config(ModelKind::pmf), 6, 6, 0.0, 6);
  auto s = short_schedule(1000);
  s.patience = 3;
  s.min_delta = 1e9;  // nothing counts as an improvement after the first epoch
  const auto r = train(*model, split_of(data, 6), 0.1, s, {});
  CHECK(r.trace.stop_reason == "patience");
  CHECK(r.trace.epochs.size() == 4);
}

TEST_CASE("train: memorizes a small fully observed array") {
  const auto data = testing::random_observations(4, 4, 1.0, 7);
  REQUIRE(data.size() == 16);
  auto cfg = testing::tiny_config(ModelKind::nnmf);
  cfg.d_prime = 4;
  cfg.hidden = {8};
  auto model = make_model(cfg, 4, 4, 0.0, 7);
  const auto r = train(*model, same_cells(data), 0.0, short_schedule(3000), {0.01, 0.9, 1e-8});
  CHECK(r.trace.best_validation_rmse < 0.05);
}

TEST_CASE("train: a huge lambda collapses the features") {
  const auto data = testing::random_observations(5, 5, 1.0, 8, 2.0, 4.0);
  auto model = make_model(testing::tiny_config(ModelKind::biased_mf), 5, 5, data.mean_value(), 8);
  const auto r = train(*model, same_cells(data), 1e6, short_schedule(400), {0.01, 0.9, 1e-8});
  double largest = 0.0;
  for (auto s : r.model->parameters(Block::features))
    for (double x : s) largest = std::max(largest, std::abs(x));
  CHECK(largest < 0.02);
  // What is left is the unpenalized global bias, i.e. the mean.
  CHECK(r.model->parameters(Block::network)[0][0] == doctest::Approx(data.mean_value()).epsilon(0.01));
}

TEST_CASE("train: divergence is reported") {
  const auto data = testing::random_observations(5, 5, 1.0, 9);
  auto model = make_model(testing::tiny_config(ModelKind::pmf), 5, 5, 0.0, 9);
  auto s = short_schedule(200);
  s.rule = StepRule::plain_gradient;
  s.plain_step = 1e3;
  CHECK_THROWS_AS(train(*model, split_of(data, 9), 0.0, s, {}), TrainingDiverged);
  CHECK_THROWS_AS(select_lambda(*model, split_of(data, 9), {{0.0, 1.0}}, s, {}), Error);
}

TEST_CASE("train: argument checks") {
  const auto data = testing::random_observations(5, 5, 1.0, 10);
  auto model = make_model(testing::tiny_config(ModelKind::pmf), 5, 5, 0.0, 10);
  CHECK_THROWS_AS(train(*model, split_of(data, 1), -1.0, short_schedule(2), {}), Error);
  auto s = short_schedule(2);
  s.patience = 0;
  CHECK_THROWS_AS(train(*model, split_of(data, 1), 0.0, s, {}), Error);
  CHECK_THROWS_AS(LambdaGrid({{1.0, 0.5}}).validate(), Error);
  CHECK_THROWS_AS(LambdaGrid({{}}).validate(), Error);
}

TEST_CASE("lambda selection: ties go to the larger lambda") {
  std::vector<LambdaRun> runs(4);
  const double rmse[] = {0.9, 0.8, 0.8, 0.85};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    runs[i].lambda = static_cast<double>(i);
    runs[i].best_validation_rmse = rmse[i];
  }
  CHECK(pick_best(runs) == 2);
  runs[2].diverged = true;
  CHECK(pick_best(runs) == 1);
  for (auto& r : runs) r.diverged = true;
  CHECK(pick_best(runs) == runs.size());
}

TEST_CASE("lambda selection: single grid value and job-count independence") {
  const auto data = testing::random_observations(8, 8, 0.8, 11);
  const auto split = split_of(data, 11);
  auto model = make_model(testing::tiny_config(ModelKind::nnmf), 8, 8, 0.0, 11);
  const auto one = select_lambda(*model, split, {{0.05}}, short_schedule(10), {0.01, 0.9, 1e-8});
  CHECK(one.lambda == 0.05);
  REQUIRE(one.runs.size() == 1);

  const LambdaGrid grid{{0.0, 0.01, 0.1, 1.0}};
  const auto a = select_lambda(*model, split, grid, short_schedule(15), {0.01, 0.9, 1e-8}, 1);
  const auto b = select_lambda(*model, split, grid, short_schedule(15), {0.01, 0.9, 1e-8}, 4);
  CHECK(a.lambda == b.lambda);
  CHECK(a.trace == b.trace);
  for (std::size_t i = 0; i < grid.values.size(); ++i) CHECK(a.runs[i].trace == b.runs[i].trace);
  std::ostringstream sa, sb;
  write_sweep_csv(a, sa);
  write_sweep_csv(b, sb);
  CHECK(sa.str() == sb.str());
}
