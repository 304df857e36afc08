#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "nnmf/error.hpp"
#include "nnmf/evaluation.hpp"
#include "test_util.hpp"

using namespace nnmf;

TEST_CASE("rmse: examples") {
  const std::vector<double> p{1, 2}, t{0, 4};
  CHECK(rmse(p, t) == doctest::Approx(1.5811388300841898).epsilon(1e-15));
  CHECK(rmse(t, t) == 0.0);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(rmse(p, std::vector<double>{1}), Error);
}

TEST_CASE("rmse: permutation invariance and homogeneity") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = g(rng);
      t[i] = g(rng);
    }
    const double base = rmse(p, t);
    CHECK(base >= 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> ps(n), ts(n), pc(n), tc(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = p[order[i]];
      ts[i] = t[order[i]];
      pc[i] = -3.0 * p[i];
      tc[i] = -3.0 * t[i];
    }
    CHECK(rmse(ps, ts) == doctest::Approx(base).epsilon(1e-13));
    CHECK(rmse(pc, tc) == doctest::Approx(3.0 * base).epsilon(1e-13));
  }
}

TEST_CASE("clamping predictions") {
  std::vector<double> p{0.2, 3.0, 7.5};
  clamp_predictions(p, 1.0, 5.0);
  CHECK(p == std::vector<double>{1.0, 3.0, 5.0});
}

TEST_CASE("summary statistics use successful repeats only") {
  ExperimentReport r;
  for (double x : {1.0, 2.0, 3.0}) {
    RepeatResult rr;
    rr.ok = true;
    rr.test_rmse = x;
    r.repeats.push_back(rr);
  }
  RepeatResult failed;
  failed.error = "boom";
  r.repeats.push_back(failed);
  summarize(r);
  CHECK(r.n_succeeded == 3);
  CHECK(r.mean_test_rmse == 2.0);
  CHECK(r.stddev_test_rmse == 1.0);

  std::ostringstream csv;
  write_report_csv(r, csv);
  CHECK(csv.str().find("partial") != std::string::npos);
  CHECK(csv.str().find("boom") != std::string::npos);
}

TEST_CASE("experiment: pmf recovers a noiseless rank-2 array") {
  const auto data = synthetic_low_rank({10, 12, 2, 0.0, 1.0, 5});
  ExperimentConfig cfg;
  cfg.model = testing::tiny_config(ModelKind::pmf);
  cfg.model.rank = 2;
  cfg.model.feature_std = 0.1;
  cfg.split = {0.1, 0.1, 1, 5};
  cfg.grid = {{0.0}};
  cfg.schedule.patience = 500;
  cfg.schedule.min_delta = 1e-6;
  cfg.rmsprop.learning_rate = 0.001;
  cfg.init_seed = 5;
  const auto report = run_experiment(data, cfg);
  REQUIRE(report.n_succeeded == 1);
  CHECK(report.mean_test_rmse < 0.01);
}

TEST_CASE("experiment: deterministic, and test cells never leak into training") {
  const auto data = testing::random_observations(12, 12, 0.8, 6, 1.0, 5.0);
  ExperimentConfig cfg;
  cfg.model = testing::tiny_config(ModelKind::nnmf);
  cfg.split = {0.2, 0.2, 2, 6};
  cfg.grid = {{0.0, 0.1}};
  cfg.schedule.max_epochs = 20;
  cfg.init_seed = 6;
  cfg.clamp_at_eval = true;
  const auto a = run_experiment(data, cfg);
  const auto b = run_experiment(data, cfg);
  REQUIRE(a.repeats.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(a.repeats[r].ok);
    CHECK(a.repeats[r].test_rmse == b.repeats[r].test_rmse);
    CHECK(a.repeats[r].lambda == b.repeats[r].lambda);
    CHECK(a.repeats[r].train_size + a.repeats[r].validation_size + a.repeats[r].test_size ==
          data.size());
  }
  CHECK(a.mean_test_rmse == b.mean_test_rmse);

  // No test cell appears in train or validation for any repeat.
  for (int r = 0; r < 2; ++r) {
    const auto split = make_split(data, cfg.split, r);
    std::vector<std::size_t> seen = split.train_indices;
    seen.insert(seen.end(), split.validation_indices.begin(), split.validation_indices.end());
    std::sort(seen.begin(), seen.end());
    for (auto i : split.test_indices) CHECK_FALSE(std::binary_search(seen.begin(), seen.end(), i));
  }
}

TEST_CASE("experiment: a failing repeat is recorded, not fatal") {
  // Test fraction leaves too few cells for validation: every repeat fails
  // with an argument error and the report says so.
  const auto data = testing::random_observations(3, 3, 1.0, 7);
  ExperimentConfig cfg;
  cfg.model = testing::tiny_config(ModelKind::pmf);
  cfg.split = {0.1, 0.05, 2, 7};
  cfg.grid = {{0.0}};
  cfg.schedule.max_epochs = 2;
  const auto report = run_experiment(data, cfg);
  CHECK(report.repeats.size() == 2);
  CHECK(report.n_succeeded == 0);
  CHECK_FALSE(report.repeats[0].ok);
  CHECK_FALSE(report.repeats[0].error.empty());
}

TEST_CASE("repeat seeds are distinct") {
  CHECK(init_seed_for_repeat(1, 0) != init_seed_for_repeat(1, 1));
  CHECK(init_seed_for_repeat(1, 0) != derive_seed(1, 0));
}
