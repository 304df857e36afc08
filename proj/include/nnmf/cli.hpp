#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nnmf/config.hpp"

namespace nnmf {

// Options shared by every command, plus the few that only some use.
struct CliOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;        // overrides run.seed
  std::optional<std::string> out_dir;       // overrides run.out
  std::filesystem::path split_file;         // train / sweep / evaluate
  std::filesystem::path checkpoint;         // evaluate
  std::string split_part = "test";          // evaluate: train, validation or test
  std::vector<std::string> models;          // report: kinds to run, default config's
};

// Config file with command-line overrides applied.
RunConfig resolve_config(const CliOptions& options);

// Each command writes only inside the run's output directory, alongside a
// config.txt snapshot and version.txt. Progress goes to `log`.
void cmd_ingest(const CliOptions& options, std::ostream& log);
void cmd_split(const CliOptions& options, std::ostream& log);
void cmd_train(const CliOptions& options, std::ostream& log);
void cmd_sweep(const CliOptions& options, std::ostream& log);
double cmd_evaluate(const CliOptions& options, std::ostream& log);
void cmd_report(const CliOptions& options, std::ostream& log);

// Full command-line entry point; returns the process exit code. Failures
// print a single "error: ..." line to `err`.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace nnmf
