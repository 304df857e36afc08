#include "nnmf/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nnmf/checkpoint.hpp"
#include "nnmf/error.hpp"
#include "nnmf/evaluation.hpp"
#include "nnmf/factory.hpp"
#include "nnmf/format.hpp"
#include "nnmf/optimizer.hpp"

namespace nnmf {

namespace fs = std::filesystem;

namespace {

// Text embedded in checkpoints: a version comment, then the canonical config.
std::string snapshot(const RunConfig& c) {
  return std::string("# nnmf ") + NNMF_VERSION + "\n" + format_run_config(c);
}

bool same_file(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::exists(a, ec) && fs::exists(b, ec) && fs::equivalent(a, b, ec);
}

// Output directory guard: creates the directory, writes the provenance
// files and refuses to let any output land on an input.
class RunDir {
 public:
  RunDir(const RunConfig& config, std::vector<fs::path> inputs)
      : root_(config.out_dir), inputs_(std::move(inputs)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create output directory " + root_.string());
    write("config.txt", format_run_config(config));
    write("version.txt", std::string(NNMF_VERSION) + "\n");
  }

  fs::path path(const std::string& name) const {
    const auto p = root_ / name;
    for (const auto& in : inputs_) {
      if (same_file(p, in)) {
        throw Error(ErrorCode::invalid_argument,
                    "refusing to overwrite input file " + in.string());
      }
    }
    return p;
  }

  std::ofstream open(const std::string& name, bool binary = false) const {
    const auto p = path(name);
    std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
    if (!f) throw Error(ErrorCode::io, "cannot write " + p.string());
    return f;
  }

  void write(const std::string& name, const std::string& text) const { open(name) << text; }

 private:
  fs::path root_;
  std::vector<fs::path> inputs_;
};

DataSplit load_split(const RunConfig& c, const CliOptions& o, const ObservationSet& data) {
  if (o.split_file.empty()) return make_split(data, split_spec(c), c.repeat);
  std::ifstream in(o.split_file);
  if (!in) throw Error(ErrorCode::io, "cannot open split file " + o.split_file.string());
  return read_split_indices(data, in);
}

std::vector<fs::path> inputs_of(const RunConfig& c, const CliOptions& o) {
  std::vector<fs::path> in{c.data_path, o.config_path};
  if (!o.split_file.empty()) in.push_back(o.split_file);
  if (!o.checkpoint.empty()) in.push_back(o.checkpoint);
  return in;
}

std::unique_ptr<Model> initial_model(const RunConfig& c, const ObservationSet& data,
                                     const DataSplit& split) {
  return make_model(c.model, data.n_rows(), data.n_cols(), split.train.mean_value(),
                    init_seed_for_repeat(c.seed, c.repeat));
}

std::string one_line(std::string s) {
  for (auto& ch : s)
    if (ch == '\n') ch = ' ';
  return s;
}

}  // namespace

RunConfig resolve_config(const CliOptions& o) {
  if (o.config_path.empty()) throw Error(ErrorCode::config, "--config is required");
  auto c = load_run_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  return c;
}

void cmd_ingest(const CliOptions& o, std::ostream& log) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  RunDir dir(c, inputs_of(c, o));
  auto f = dir.open("data.obs");
  write_canonical(data, f);
  log << "ingested " << data.size() << " observations (" << data.n_rows() << " x "
      << data.n_cols() << ")\n";
}

void cmd_split(const CliOptions& o, std::ostream& log) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  RunDir dir(c, inputs_of(c, o));
  const auto splits = make_splits(data, split_spec(c));
  for (std::size_t r = 0; r < splits.size(); ++r) {
    auto f = dir.open("split_" + std::to_string(r) + ".tsv");
    write_split_indices(splits[r], static_cast<int>(r), f);
    log << "split " << r << ": train " << splits[r].train.size() << ", validation "
        << splits[r].validation.size() << ", test " << splits[r].test.size() << "\n";
  }
}

void cmd_train(const CliOptions& o, std::ostream& log) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  RunDir dir(c, inputs_of(c, o));
  const auto split = load_split(c, o, data);
  const auto initial = initial_model(c, data, split);
  const auto result = train(*initial, split, c.lambda, c.schedule, c.rmsprop);
  save_checkpoint(*result.model, snapshot(c), dir.path("model.ckpt"));
  auto trace = dir.open("trace.csv");
  write_trace_csv(result.trace, trace);
  log << "trained " << to_string(c.model.kind) << " for " << result.trace.epochs.size()
      << " epochs; best epoch " << result.trace.best_epoch << ", validation RMSE "
      << format_real(result.trace.best_validation_rmse) << "\n";
}

void cmd_sweep(const CliOptions& o, std::ostream& log) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  RunDir dir(c, inputs_of(c, o));
  const auto split = load_split(c, o, data);
  const auto initial = initial_model(c, data, split);
  const auto sel = select_lambda(*initial, split, c.grid, c.schedule, c.rmsprop, c.jobs);
  auto sweep = dir.open("sweep.csv");
  write_sweep_csv(sel, sweep);
  auto trace = dir.open("trace.csv");
  write_trace_csv(sel.trace, trace);
  auto selected = c;
  selected.lambda = sel.lambda;
  save_checkpoint(*sel.model, snapshot(selected), dir.path("model.ckpt"));
  log << "selected lambda " << format_real(sel.lambda) << " (validation RMSE "
      << format_real(sel.trace.best_validation_rmse) << ")\n";
}

double cmd_evaluate(const CliOptions& o, std::ostream& log) {
  const auto c = resolve_config(o);
  if (o.checkpoint.empty()) throw Error(ErrorCode::invalid_argument, "--checkpoint is required");
  const auto data = load_dataset(c);
  RunDir dir(c, inputs_of(c, o));
  const auto split = load_split(c, o, data);
  const auto expected = make_model(c.model, data.n_rows(), data.n_cols(), 0.0, 0)->shape();
  const auto loaded = load_checkpoint(o.checkpoint, {c.model.kind, expected});

  const ObservationSet* part = nullptr;
  if (o.split_part == "train") part = &split.train;
  if (o.split_part == "validation") part = &split.validation;
  if (o.split_part == "test") part = &split.test;
  if (!part) throw Error(ErrorCode::invalid_argument, "unknown split '" + o.split_part + "'");

  auto predictions = loaded.model->predict_all(*part);
  if (c.clamp_at_eval) {
    clamp_predictions(predictions, split.train.min_value(), split.train.max_value());
  }
  std::vector<double> targets;
  for (const auto& t : part->triples()) targets.push_back(t.value);
  const double value = rmse(predictions, targets);

  auto f = dir.open("evaluate.csv");
  f << csv_row({"checkpoint", "split", "count", "rmse"});
  f << csv_row({o.checkpoint.string(), o.split_part, std::to_string(part->size()),
                format_real(value)});
  log << o.split_part << " RMSE " << format_real(value) << "\n";
  return value;
}

void cmd_report(const CliOptions& o, std::ostream& log) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  RunDir dir(c, inputs_of(c, o));
  std::vector<ModelKind> kinds;
  for (const auto& m : o.models) kinds.push_back(parse_model_kind(m));
  if (kinds.empty()) kinds.push_back(c.model.kind);

  std::vector<ExperimentReport> reports;
  for (auto kind : kinds) {
    auto run = c;
    run.model.kind = kind;
    const auto progress = [&](const std::string& line) {
      log << to_string(kind) << " " << line << "\n";
    };
    reports.push_back(run_experiment(data, experiment_config(run), progress));
    auto f = dir.open("report_" + std::string(to_string(kind)) + ".csv");
    write_report_csv(reports.back(), f);
  }
  std::ostringstream table;
  write_report_table(reports, table);
  dir.write("report.txt", table.str());
  log << table.str();
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural network matrix factorization"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the command name
  CliOptions o;
  std::string seed_text;
  std::string out_text;
  app.add_option("--config", o.config_path, "run configuration file")->required();
  app.add_option("--seed", seed_text, "override run.seed");
  app.add_option("--out", out_text, "override run.out");

  const auto with_split = [&](CLI::App* cmd) {
    cmd->add_option("--split-file", o.split_file, "split index file instead of run.seed");
    return cmd;
  };
  auto* ingest = app.add_subcommand("ingest", "write the dataset in canonical form");
  auto* split = app.add_subcommand("split", "write split index files");
  auto* tr = with_split(app.add_subcommand("train", "train at train.lambda"));
  auto* sweep = with_split(app.add_subcommand("sweep", "select lambda on validation"));
  auto* eval = with_split(app.add_subcommand("evaluate", "RMSE of a checkpoint"));
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  eval->add_option("--split", o.split_part, "train, validation or test");
  auto* report = app.add_subcommand("report", "all repeats, aggregated");
  report->add_option("--models", o.models, "model kinds (default: model.kind)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (!seed_text.empty()) {
      std::uint64_t s = 0;
      const auto [p, ec] = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), s);
      if (ec != std::errc() || p != seed_text.data() + seed_text.size()) {
        throw Error(ErrorCode::invalid_argument, "invalid --seed '" + seed_text + "'");
      }
      o.seed = s;
    }
    if (!out_text.empty()) o.out_dir = out_text;

    if (ingest->parsed()) cmd_ingest(o, err);
    if (split->parsed()) cmd_split(o, err);
    if (tr->parsed()) cmd_train(o, err);
    if (sweep->parsed()) cmd_sweep(o, err);
    if (eval->parsed()) out << format_real(cmd_evaluate(o, err)) << "\n";
    if (report->parsed()) cmd_report(o, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return 2;
  }
  return 0;
}

}  // namespace nnmf
