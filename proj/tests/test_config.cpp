#include <doctest.h>

#include <string>

#include "nnmf/config.hpp"
#include "nnmf/error.hpp"

using namespace nnmf;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("config: only data.path is required") {
  const auto c = parse_run_config("[data]\npath = u.data\n");
  CHECK(c.data_path == "u.data");
  RunConfig defaults;
  defaults.data_path = "u.data";
  CHECK(c == defaults);
  CHECK(c.model.hidden == std::vector<Index>{50, 50, 50});
  CHECK(c.grid == default_lambda_grid());
  CHECK(c.schedule.patience == 50);
  CHECK(c.schedule.min_delta == 1e-5);
  CHECK(c.rmsprop.decay == 0.9);
}

TEST_CASE("config: canonical text round-trips") {
  const auto c = parse_run_config(R"(
# comment
[data]
path = data/nips.tsv
format = edges-square

[split]
test_fraction = 0.1
validation_fraction = 0.1
repeats = 3

[model]
kind = ntn
rank = 12
ntn_hidden = 7
ntn_output_sigmoid = true
ntn_output_min = 1
ntn_output_max = 5
hidden = 20, 20, 20, 20

[train]
lambda_grid = 0, 0.1, 10
learning_rate = 0.005
max_epochs = 123
repeat = 2
jobs = 4

[run]
seed = 18446744073709551615
out = results/x
)");
  CHECK(c.data_format == DataFormat::edges_square);
  CHECK(c.model.kind == ModelKind::ntn);
  CHECK(c.model.hidden.size() == 4);
  CHECK(c.grid.values == std::vector<double>{0.0, 0.1, 10.0});
  CHECK(c.seed == 18446744073709551615ULL);
  const auto text = format_run_config(c);
  const auto again = parse_run_config(text);
  CHECK(again == c);
  CHECK(format_run_config(again) == text);
}

TEST_CASE("config: errors name the offending key") {
  CHECK(config_error("[data]\nformat = movielens\n").find("data.path") != std::string::npos);
  CHECK(config_error("[data]\npath = x\n[model]\nwidth = 3\n").find("model.width") != std::string::npos);
  CHECK(config_error("[data]\npath = x\npath = y\n").find("duplicate key data.path") !=
        std::string::npos);
  CHECK(config_error("[data]\npath = x\n[train]\nlearning_rate = fast\n").find("train.learning_rate") !=
        std::string::npos);
  CHECK(config_error("[data]\npath = x\n[train]\nlearning_rate = 0\n").find("train.learning_rate") !=
        std::string::npos);
  CHECK(config_error("[data]\npath = x\nformat = csv\n").find("data.format") != std::string::npos);
  CHECK(config_error("[data]\npath = x\n[train]\nlambda_grid = 1, 0.5\n").find("train.lambda_grid") !=
        std::string::npos);
  CHECK(config_error("[data]\npath = x\n[model]\nhidden = 5, -1\n").find("model.hidden") !=
        std::string::npos);
  CHECK(config_error("[data]\npath = x\n[split]\nrepeats = 2\n[train]\nrepeat = 2\n")
            .find("train.repeat") != std::string::npos);
  CHECK(config_error("[data]\npath = x\nnot a pair\n").find("line 3") != std::string::npos);
}

TEST_CASE("config: experiment settings follow the run config") {
  auto c = parse_run_config("[data]\npath = x\n[run]\nseed = 9\n");
  const auto e = experiment_config(c);
  CHECK(e.split.seed == 9);
  CHECK(e.init_seed == 9);
  CHECK(e.config_snapshot == format_run_config(c));
}
