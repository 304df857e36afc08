#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nnmf/checkpoint.hpp"
#include "nnmf/cli.hpp"
#include "test_util.hpp"

using namespace nnmf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nnmf");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// A small ratings file and config in a fresh directory.
fs::path workspace(const std::string& name, const std::string& model_section) {
  const auto dir = testing::temp_path(name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream data(dir / "u.data");
    std::mt19937_64 rng(1);
    for (int u = 1; u <= 15; ++u)
      for (int m = 1; m <= 12; ++m)
        if (rng() % 3 != 0) data << u << '\t' << m << '\t' << 1 + rng() % 5 << "\t0\n";
  }
  std::ofstream cfg(dir / "run.cfg");
  cfg << "[data]\npath = " << (dir / "u.data").string() << "\n[split]\nrepeats = 2\n"
      << "[model]\n" << model_section << "[train]\nlambda_grid = 0, 1\nmax_epochs = 8\n"
      << "[run]\nout = " << (dir / "out").string() << "\n";
  return dir;
}

}  // namespace

TEST_CASE("cli: every command runs and writes provenance") {
  const auto dir = workspace("cli_all", "kind = nnmf\nd = 2\nd_prime = 3\nhidden = 4\n");
  const auto cfg = (dir / "run.cfg").string();
  const auto data_before = slurp(dir / "u.data");
  const auto cfg_before = slurp(dir / "run.cfg");

  CHECK(cli({"--config", cfg, "ingest"}).code == 0);
  CHECK(cli({"--config", cfg, "split"}).code == 0);
  CHECK(cli({"train", "--config", cfg}).code == 0);
  CHECK(cli({"--config", cfg, "sweep", "--out", (dir / "sweep").string()}).code == 0);
  const auto eval = cli({"--config", cfg, "evaluate", "--checkpoint",
                         (dir / "out" / "model.ckpt").string(), "--split", "validation"});
  CHECK(eval.code == 0);
  CHECK(std::stod(eval.out) > 0.0);
  CHECK(cli({"--config", cfg, "report", "--models", "pmf,biasedmf"}).code == 0);
  CHECK(cli({"--config", cfg, "train", "--split-file", (dir / "out" / "split_1.tsv").string(),
             "--out", (dir / "from_file").string()})
            .code == 0);

  for (const char* f : {"data.obs", "split_0.tsv", "split_1.tsv", "model.ckpt", "trace.csv",
                        "evaluate.csv", "report_pmf.csv", "report_biasedmf.csv", "report.txt",
                        "config.txt", "version.txt"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "out" / f));
  }
  CHECK(fs::exists(dir / "sweep" / "sweep.csv"));

  // Inputs untouched; the embedded config round-trips.
  CHECK(slurp(dir / "u.data") == data_before);
  CHECK(slurp(dir / "run.cfg") == cfg_before);
  const auto loaded = load_checkpoint(dir / "out" / "model.ckpt");
  const auto text = slurp(dir / "out" / "config.txt");
  CHECK(format_run_config(parse_run_config(loaded.config_text)) == text);
  CHECK(loaded.config_text.find(NNMF_VERSION) != std::string::npos);
}

TEST_CASE("cli: --seed overrides run.seed") {
  const auto dir = workspace("cli_seed", "kind = pmf\nrank = 2\n");
  const auto cfg = (dir / "run.cfg").string();
  REQUIRE(cli({"--config", cfg, "--seed", "5", "train"}).code == 0);
  CHECK(slurp(dir / "out" / "config.txt").find("seed = 5\n") != std::string::npos);
  const auto a = slurp(dir / "out" / "model.ckpt");
  REQUIRE(cli({"--config", cfg, "--seed", "6", "train"}).code == 0);
  CHECK(slurp(dir / "out" / "model.ckpt") != a);
}

TEST_CASE("cli: failures exit nonzero with one diagnostic line") {
  const auto dir = workspace("cli_fail", "kind = nnmf\nd = 2\nd_prime = 3\nhidden = 4\n");
  const auto cfg = (dir / "run.cfg").string();
  REQUIRE(cli({"--config", cfg, "train"}).code == 0);

  SUBCASE("checkpoint dims mismatch the config") {
    auto text = slurp(dir / "run.cfg");
    text.replace(text.find("d_prime = 3"), 11, "d_prime = 4");
    std::ofstream(dir / "other.cfg") << text;
    const auto r = cli({"--config", (dir / "other.cfg").string(), "evaluate", "--checkpoint",
                        (dir / "out" / "model.ckpt").string()});
    CHECK(r.code != 0);
    CHECK(r.err.rfind("error: shape:", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  SUBCASE("unknown config key") {
    std::ofstream(dir / "bad.cfg") << "[data]\npath = x\n[model]\nwidth = 3\n";
    const auto r = cli({"--config", (dir / "bad.cfg").string(), "train"});
    CHECK(r.code != 0);
    CHECK(r.err.find("model.width") != std::string::npos);
  }
  SUBCASE("missing dataset") {
    std::ofstream(dir / "missing.cfg") << "[data]\npath = " << (dir / "nope").string() << "\n";
    const auto r = cli({"--config", (dir / "missing.cfg").string(), "ingest"});
    CHECK(r.code != 0);
    CHECK(r.err.rfind("error: io:", 0) == 0);
  }
  SUBCASE("format mismatch") {
    std::ofstream(dir / "fmt.cfg") << "[data]\npath = " << (dir / "u.data").string()
                                   << "\nformat = canonical\n";
    CHECK(cli({"--config", (dir / "fmt.cfg").string(), "ingest"}).code != 0);
  }
  SUBCASE("outputs may not overwrite inputs") {
    const auto r = cli({"--config", (dir / "out" / "config.txt").string(), "train"});
    CHECK(r.code != 0);
  }
  SUBCASE("no command") { CHECK(cli({"--config", cfg}).code != 0); }
}
