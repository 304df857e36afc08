#include "nnmf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "nnmf/error.hpp"
#include "nnmf/format.hpp"

namespace nnmf {

namespace {

std::uint64_t cell_key(Index row, Index col, Index n_cols) {
  return static_cast<std::uint64_t>(row) * static_cast<std::uint64_t>(n_cols) +
         static_cast<std::uint64_t>(col);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::parse,
              "parse error at line " + std::to_string(line_no) + ": " + why);
}

std::int64_t parse_int(std::string_view field, std::size_t line_no,
                       const char* what) {
  std::int64_t v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    parse_fail(line_no, std::string("non-numeric ") + what + " '" +
                            std::string(field) + "'");
  }
  return v;
}

double parse_real(std::string_view field, std::size_t line_no,
                  const char* what) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    parse_fail(line_no, std::string("non-numeric ") + what + " '" +
                            std::string(field) + "'");
  }
  return v;
}

// Reads lines, tolerating a single trailing newline at end of file.
template <typename F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t pending_blank = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      if (pending_blank == 0) pending_blank = line_no;
      continue;
    }
    if (pending_blank != 0) parse_fail(pending_blank, "empty line");
    f(std::string_view(line), line_no);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return in;
}

// Rejects duplicates with the line number of the second occurrence.
class DuplicateGuard {
 public:
  void check(std::int64_t row, std::int64_t col, std::size_t line_no) {
    const auto key = (static_cast<std::uint64_t>(row) << 32) ^
                     static_cast<std::uint64_t>(col);
    if (!seen_.insert(key).second) {
      throw Error(ErrorCode::duplicate_observation,
                  "duplicate observation (" + std::to_string(row) + ", " +
                      std::to_string(col) + ") at line " +
                      std::to_string(line_no));
    }
  }

 private:
  std::unordered_set<std::uint64_t> seen_;
};

void require_non_empty(const std::vector<Triple>& triples) {
  if (triples.empty()) {
    throw Error(ErrorCode::empty_data, "no observations in input");
  }
}

}  // namespace

ObservationSet::ObservationSet(Index n_rows, Index n_cols,
                               std::vector<Triple> triples)
    : n_rows_(n_rows), n_cols_(n_cols), triples_(std::move(triples)) {
  if (n_rows_ <= 0 || n_cols_ <= 0) {
    throw Error(ErrorCode::dimension, "array dimensions must be positive");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(triples_.size());
  for (const auto& t : triples_) {
    if (t.row < 0 || t.row >= n_rows_ || t.col < 0 || t.col >= n_cols_) {
      throw Error(ErrorCode::index_range,
                  "observation (" + std::to_string(t.row) + ", " +
                      std::to_string(t.col) + ") outside " +
                      std::to_string(n_rows_) + "x" + std::to_string(n_cols_));
    }
    if (!seen.insert(cell_key(t.row, t.col, n_cols_)).second) {
      throw Error(ErrorCode::duplicate_observation,
                  "duplicate observation (" + std::to_string(t.row) + ", " +
                      std::to_string(t.col) + ")");
    }
  }
}

ObservationSet ObservationSet::subset(
    const std::vector<std::size_t>& indices) const {
  ObservationSet out;
  out.n_rows_ = n_rows_;
  out.n_cols_ = n_cols_;
  out.triples_.reserve(indices.size());
  for (auto i : indices) out.triples_.push_back(triples_.at(i));
  return out;
}

double ObservationSet::min_value() const {
  double v = triples_.at(0).value;
  for (const auto& t : triples_) v = std::min(v, t.value);
  return v;
}

double ObservationSet::max_value() const {
  double v = triples_.at(0).value;
  for (const auto& t : triples_) v = std::max(v, t.value);
  return v;
}

double ObservationSet::mean_value() const {
  if (triples_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : triples_) s += t.value;
  return s / static_cast<double>(triples_.size());
}

ObservationSet parse_movielens(std::istream& in) {
  std::vector<Triple> triples;
  DuplicateGuard guard;
  Index n = 0;
  Index m = 0;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      parse_fail(line_no, "expected 4 tab-separated fields, got " +
                              std::to_string(fields.size()));
    }
    const auto user = parse_int(fields[0], line_no, "user id");
    const auto item = parse_int(fields[1], line_no, "item id");
    const auto rating = parse_int(fields[2], line_no, "rating");
    parse_int(fields[3], line_no, "timestamp");
    if (user < 1 || item < 1) parse_fail(line_no, "ids must be 1-based");
    if (rating < 1 || rating > 5) {
      parse_fail(line_no, "rating " + std::to_string(rating) +
                              " outside [1, 5]");
    }
    guard.check(user, item, line_no);
    n = std::max<Index>(n, user);
    m = std::max<Index>(m, item);
    triples.push_back({user - 1, item - 1, static_cast<double>(rating)});
  });
  require_non_empty(triples);
  return ObservationSet(n, m, std::move(triples));
}

ObservationSet ingest_movielens(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_movielens(in);
}

ObservationSet parse_edge_list(std::istream& in, bool square) {
  struct Raw {
    std::int64_t row, col;
    double value;
  };
  std::vector<Raw> raw;
  DuplicateGuard guard;
  std::int64_t min_id = 0;
  std::int64_t max_row = -1;
  std::int64_t max_col = -1;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      parse_fail(line_no, "expected 3 tab-separated fields, got " +
                              std::to_string(fields.size()));
    }
    const auto row = parse_int(fields[0], line_no, "row id");
    const auto col = parse_int(fields[1], line_no, "column id");
    const auto value = parse_real(fields[2], line_no, "value");
    if (row < 0 || col < 0) parse_fail(line_no, "negative id");
    guard.check(row, col, line_no);
    if (raw.empty()) min_id = std::min(row, col);
    min_id = std::min({min_id, row, col});
    max_row = std::max(max_row, row);
    max_col = std::max(max_col, col);
    raw.push_back({row, col, value});
  });
  if (raw.empty()) throw Error(ErrorCode::empty_data, "no observations in input");

  const std::int64_t base = min_id == 0 ? 0 : 1;
  Index n = max_row - base + 1;
  Index m = max_col - base + 1;
  if (square) n = m = std::max(n, m);
  std::vector<Triple> triples;
  triples.reserve(raw.size());
  for (const auto& r : raw) triples.push_back({r.row - base, r.col - base, r.value});
  return ObservationSet(n, m, std::move(triples));
}

ObservationSet ingest_edge_list(const std::filesystem::path& path,
                                bool square) {
  auto in = open_input(path);
  return parse_edge_list(in, square);
}

void write_canonical(const ObservationSet& data, std::ostream& out) {
  out << "#obs " << data.n_rows() << ' ' << data.n_cols() << '\n';
  for (const auto& t : data.triples()) {
    out << t.row << '\t' << t.col << '\t' << format_real(t.value) << '\n';
  }
}

void write_canonical(const ObservationSet& data,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  write_canonical(data, out);
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

ObservationSet read_canonical(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw Error(ErrorCode::parse, "parse error at line 1: missing #obs header");
  }
  std::istringstream hs(header);
  std::string tag;
  Index n = 0;
  Index m = 0;
  if (!(hs >> tag >> n >> m) || tag != "#obs" || n <= 0 || m <= 0) {
    throw Error(ErrorCode::parse, "parse error at line 1: bad #obs header");
  }
  std::vector<Triple> triples;
  std::size_t offset = 1;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      parse_fail(line_no + offset, "expected 3 tab-separated fields");
    }
    triples.push_back({parse_int(fields[0], line_no + offset, "row"),
                       parse_int(fields[1], line_no + offset, "column"),
                       parse_real(fields[2], line_no + offset, "value")});
  });
  require_non_empty(triples);
  return ObservationSet(n, m, std::move(triples));
}

ObservationSet read_canonical(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_canonical(in);
}

void SplitSpec::validate() const {
  const auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_unit(test_fraction) || !in_unit(validation_fraction)) {
    throw Error(ErrorCode::invalid_argument,
                "split fractions must lie in (0, 1)");
  }
  if (test_fraction + (1.0 - test_fraction) * validation_fraction >= 1.0) {
    throw Error(ErrorCode::invalid_argument,
                "test and validation fractions leave no training data");
  }
  if (n_repeats < 1) {
    throw Error(ErrorCode::invalid_argument, "n_repeats must be positive");
  }
}

std::uint64_t splitmix64_finalize(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64_finalize(seed + (stream + 1) * 0x9e3779b97f4a7c15ULL);
}

std::size_t fraction_count(double fraction, std::size_t count) {
  const long double product =
      static_cast<long double>(fraction) * static_cast<long double>(count);
  return static_cast<std::size_t>(std::floor(product + 1e-9L));
}

DataSplit split_from_indices(const ObservationSet& data,
                             std::vector<std::size_t> train,
                             std::vector<std::size_t> validation,
                             std::vector<std::size_t> test) {
  std::vector<char> used(data.size(), 0);
  for (const auto* part : {&train, &validation, &test}) {
    for (auto i : *part) {
      if (i >= data.size()) {
        throw Error(ErrorCode::index_range,
                    "split index " + std::to_string(i) + " out of range");
      }
      if (used[i]++) {
        throw Error(ErrorCode::invalid_argument,
                    "split index " + std::to_string(i) + " used twice");
      }
    }
  }
  DataSplit split;
  split.train = data.subset(train);
  split.validation = data.subset(validation);
  split.test = data.subset(test);
  split.train_indices = std::move(train);
  split.validation_indices = std::move(validation);
  split.test_indices = std::move(test);
  return split;
}

DataSplit make_split(const ObservationSet& data, const SplitSpec& spec,
                     int repeat) {
  spec.validate();
  const std::size_t total = data.size();
  const std::size_t n_test = fraction_count(spec.test_fraction, total);
  const std::size_t n_val =
      fraction_count(spec.validation_fraction, total - n_test);
  if (n_test == 0 || n_val == 0 || n_test + n_val >= total) {
    throw Error(ErrorCode::invalid_argument,
                "split of " + std::to_string(total) +
                    " observations leaves an empty partition (test=" +
                    std::to_string(n_test) +
                    ", validation=" + std::to_string(n_val) + ")");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(repeat)));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> test(order.begin(), order.begin() + n_test);
  std::vector<std::size_t> val(order.begin() + n_test,
                               order.begin() + n_test + n_val);
  std::vector<std::size_t> train(order.begin() + n_test + n_val, order.end());
  // Source order inside each partition keeps accumulation order stable.
  std::sort(test.begin(), test.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return split_from_indices(data, std::move(train), std::move(val),
                            std::move(test));
}

std::vector<DataSplit> make_splits(const ObservationSet& data,
                                   const SplitSpec& spec) {
  spec.validate();
  std::vector<DataSplit> splits;
  splits.reserve(spec.n_repeats);
  for (int r = 0; r < spec.n_repeats; ++r) {
    splits.push_back(make_split(data, spec, r));
  }
  return splits;
}

void write_split_indices(const DataSplit& split, int repeat, std::ostream& out) {
  out << "#split " << repeat << '\n';
  const auto emit = [&](const char* name, const std::vector<std::size_t>& idx) {
    for (auto i : idx) out << name << '\t' << i << '\n';
  };
  emit("train", split.train_indices);
  emit("validation", split.validation_indices);
  emit("test", split.test_indices);
}

DataSplit read_split_indices(const ObservationSet& data, std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#split ", 0) != 0) {
    throw Error(ErrorCode::parse, "parse error at line 1: missing #split header");
  }
  std::vector<std::size_t> train, val, test;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 2) parse_fail(line_no + 1, "expected part<TAB>index");
    const auto idx = parse_int(fields[1], line_no + 1, "index");
    if (idx < 0) parse_fail(line_no + 1, "negative index");
    const auto i = static_cast<std::size_t>(idx);
    if (fields[0] == "train") {
      train.push_back(i);
    } else if (fields[0] == "validation") {
      val.push_back(i);
    } else if (fields[0] == "test") {
      test.push_back(i);
    } else {
      parse_fail(line_no + 1, "unknown partition '" + std::string(fields[0]) + "'");
    }
  });
  return split_from_indices(data, std::move(train), std::move(val),
                            std::move(test));
}

ObservationSet synthetic_low_rank(const LowRankSpec& spec) {
  if (spec.n_rows <= 0 || spec.n_cols <= 0 || spec.rank <= 0) {
    throw Error(ErrorCode::invalid_argument, "synthetic dimensions must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RowMatrix u(spec.n_rows, spec.rank);
  RowMatrix v(spec.n_cols, spec.rank);
  for (Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  std::vector<Triple> triples;
  for (Index n = 0; n < spec.n_rows; ++n) {
    for (Index m = 0; m < spec.n_cols; ++m) {
      const double keep = unit(rng);
      const double noise = spec.noise_std > 0.0 ? spec.noise_std * normal(rng) : 0.0;
      if (keep >= spec.observed_fraction) continue;
      triples.push_back({n, m, u.row(n).dot(v.row(m)) + noise});
    }
  }
  require_non_empty(triples);
  return ObservationSet(spec.n_rows, spec.n_cols, std::move(triples));
}

}  // namespace nnmf
