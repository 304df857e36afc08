#include "nnmf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "nnmf/error.hpp"
#include "nnmf/format.hpp"

namespace nnmf {

std::string_view to_string(DataFormat format) {
  switch (format) {
    case DataFormat::movielens: return "movielens";
    case DataFormat::edges: return "edges";
    case DataFormat::edges_square: return "edges-square";
    case DataFormat::canonical: return "canonical";
  }
  return "unknown";
}

DataFormat parse_data_format(std::string_view text) {
  for (auto f : {DataFormat::movielens, DataFormat::edges, DataFormat::edges_square,
                 DataFormat::canonical}) {
    if (text == to_string(f)) return f;
  }
  throw Error(ErrorCode::config, "unknown data format '" + std::string(text) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::config, "invalid value '" + value + "' for key " + key);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

// One entry per key: how to read it into a RunConfig and how to print it.
struct Field {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> read;
  std::function<std::string(const RunConfig&)> write;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    const auto real = [&](const char* s, const char* n, auto member) {
      f.push_back({s, n,
                   [member](RunConfig& c, const std::string& k, const std::string& v) {
                     member(c) = to_real(k, v);
                   },
                   [member](const RunConfig& c) {
                     return format_real(member(const_cast<RunConfig&>(c)));
                   }});
    };
    const auto integer = [&](const char* s, const char* n, auto member) {
      f.push_back({s, n,
                   [member](RunConfig& c, const std::string& k, const std::string& v) {
                     member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(
                         to_int(k, v));
                   },
                   [member](const RunConfig& c) {
                     return std::to_string(member(const_cast<RunConfig&>(c)));
                   }});
    };
    const auto boolean = [&](const char* s, const char* n, auto member) {
      f.push_back({s, n,
                   [member](RunConfig& c, const std::string& k, const std::string& v) {
                     member(c) = to_bool(k, v);
                   },
                   [member](const RunConfig& c) {
                     return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false");
                   }});
    };

    f.push_back({"data", "path",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.data_path = v; },
                 [](const RunConfig& c) { return c.data_path; }});
    f.push_back({"data", "format",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.data_format = parse_data_format(v);
                   } catch (const Error&) {
                     bad_value(k, v);
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.data_format)); }});

    real("split", "test_fraction", [](RunConfig& c) -> double& { return c.test_fraction; });
    real("split", "validation_fraction",
         [](RunConfig& c) -> double& { return c.validation_fraction; });
    integer("split", "repeats", [](RunConfig& c) -> int& { return c.repeats; });

    f.push_back({"model", "kind",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.model.kind = parse_model_kind(v);
                   } catch (const Error&) {
                     bad_value(k, v);
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.model.kind)); }});
    integer("model", "d", [](RunConfig& c) -> Index& { return c.model.d; });
    integer("model", "d_prime", [](RunConfig& c) -> Index& { return c.model.d_prime; });
    integer("model", "k", [](RunConfig& c) -> Index& { return c.model.k; });
    f.push_back({"model", "hidden",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.model.hidden.clear();
                   if (v.empty()) return;
                   for (const auto& item : split_list(v)) {
                     const auto width = to_int(k, item);
                     if (width <= 0) bad_value(k, v);
                     c.model.hidden.push_back(width);
                   }
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> items;
                   for (auto h : c.model.hidden) items.push_back(std::to_string(h));
                   return join(items);
                 }});
    integer("model", "rank", [](RunConfig& c) -> Index& { return c.model.rank; });
    integer("model", "ntn_hidden", [](RunConfig& c) -> Index& { return c.model.ntn_hidden; });
    boolean("model", "ntn_output_sigmoid",
            [](RunConfig& c) -> bool& { return c.model.ntn_output_sigmoid; });
    real("model", "ntn_output_min", [](RunConfig& c) -> double& { return c.model.ntn_output_min; });
    real("model", "ntn_output_max", [](RunConfig& c) -> double& { return c.model.ntn_output_max; });
    real("model", "feature_std", [](RunConfig& c) -> double& { return c.model.feature_std; });

    real("train", "lambda", [](RunConfig& c) -> double& { return c.lambda; });
    f.push_back({"train", "lambda_grid",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.grid.values.clear();
                   for (const auto& item : split_list(v)) c.grid.values.push_back(to_real(k, item));
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> items;
                   for (double l : c.grid.values) items.push_back(format_real(l));
                   return join(items);
                 }});
    real("train", "learning_rate", [](RunConfig& c) -> double& { return c.rmsprop.learning_rate; });
    real("train", "rmsprop_decay", [](RunConfig& c) -> double& { return c.rmsprop.decay; });
    real("train", "rmsprop_epsilon", [](RunConfig& c) -> double& { return c.rmsprop.epsilon; });
    integer("train", "network_steps", [](RunConfig& c) -> int& { return c.schedule.network_steps; });
    integer("train", "feature_steps", [](RunConfig& c) -> int& { return c.schedule.feature_steps; });
    integer("train", "max_epochs", [](RunConfig& c) -> int& { return c.schedule.max_epochs; });
    integer("train", "patience", [](RunConfig& c) -> int& { return c.schedule.patience; });
    real("train", "min_delta", [](RunConfig& c) -> double& { return c.schedule.min_delta; });
    integer("train", "repeat", [](RunConfig& c) -> int& { return c.repeat; });
    integer("train", "jobs", [](RunConfig& c) -> int& { return c.jobs; });
    boolean("train", "clamp_at_eval", [](RunConfig& c) -> bool& { return c.clamp_at_eval; });

    f.push_back({"run", "seed",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.seed = to_uint(k, v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back({"run", "out",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir; }});
    return f;
  }();
  return table;
}

void validate(const RunConfig& c) {
  const auto fail = [](const char* key, const std::string& why) {
    throw Error(ErrorCode::config, std::string("invalid value for key ") + key + ": " + why);
  };
  if (c.data_path.empty()) {
    throw Error(ErrorCode::config, "missing required key data.path");
  }
  try {
    split_spec(c).validate();
  } catch (const Error& e) {
    fail("split.test_fraction/split.validation_fraction/split.repeats", e.what());
  }
  try {
    c.grid.validate();
  } catch (const Error& e) {
    fail("train.lambda_grid", e.what());
  }
  try {
    c.schedule.validate();
  } catch (const Error& e) {
    fail("train.max_epochs/patience/min_delta/steps", e.what());
  }
  if (c.lambda < 0.0) fail("train.lambda", "must be >= 0");
  if (!(c.rmsprop.learning_rate > 0.0)) fail("train.learning_rate", "must be > 0");
  if (!(c.rmsprop.decay > 0.0 && c.rmsprop.decay < 1.0)) fail("train.rmsprop_decay", "must lie in (0, 1)");
  if (!(c.rmsprop.epsilon > 0.0)) fail("train.rmsprop_epsilon", "must be > 0");
  if (c.repeat < 0 || c.repeat >= c.repeats) fail("train.repeat", "must lie in [0, split.repeats)");
  if (c.jobs < 1) fail("train.jobs", "must be >= 1");
  if (!(c.model.feature_std > 0.0)) fail("model.feature_std", "must be > 0");
  if (c.model.d < 0 || c.model.d_prime < 0 || 2 * c.model.d + c.model.d_prime <= 0) {
    fail("model.d/model.d_prime", "need D >= 0, D' >= 0 and 2D + D' > 0");
  }
  if (c.model.k < 1) fail("model.k", "must be >= 1");
  if (c.model.rank < 1) fail("model.rank", "must be >= 1");
  if (c.model.ntn_hidden < 1) fail("model.ntn_hidden", "must be >= 1");
  if (c.model.ntn_output_sigmoid && !(c.model.ntn_output_max > c.model.ntn_output_min)) {
    fail("model.ntn_output_max", "must exceed model.ntn_output_min");
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  RunConfig c;
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[std::string(f.section) + "." + f.name] = &f;

  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCode::config, "malformed section header at line " +
                                           std::to_string(line_no));
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::config,
                  "expected key = value at line " + std::to_string(line_no));
    }
    const auto key = section + "." + trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw Error(ErrorCode::config, "unknown key " + key);
    if (!seen.insert(key).second) throw Error(ErrorCode::config, "duplicate key " + key);
    it->second->read(c, key, value);
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += std::string(f.name) + " = " + f.write(config) + "\n";
  }
  return out;
}

SplitSpec split_spec(const RunConfig& c) {
  return {c.test_fraction, c.validation_fraction, c.repeats, c.seed};
}

ExperimentConfig experiment_config(const RunConfig& c) {
  ExperimentConfig e;
  e.model = c.model;
  e.split = split_spec(c);
  e.grid = c.grid;
  e.schedule = c.schedule;
  e.rmsprop = c.rmsprop;
  e.init_seed = c.seed;
  e.clamp_at_eval = c.clamp_at_eval;
  e.jobs = c.jobs;
  e.config_snapshot = format_run_config(c);
  return e;
}

ObservationSet load_dataset(const RunConfig& c) {
  switch (c.data_format) {
    case DataFormat::movielens: return ingest_movielens(c.data_path);
    case DataFormat::edges: return ingest_edge_list(c.data_path, false);
    case DataFormat::edges_square: return ingest_edge_list(c.data_path, true);
    case DataFormat::canonical: return read_canonical(std::filesystem::path(c.data_path));
  }
  throw Error(ErrorCode::config, "unknown data format");
}

}  // namespace nnmf
