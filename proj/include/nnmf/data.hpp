#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnmf/types.hpp"

namespace nnmf {

struct Triple {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Partially observed N x M array: the observed entries and the array shape.
// Rows and columns are 0-based.
class ObservationSet {
 public:
  ObservationSet() = default;

  // Validates range and uniqueness of (row, col). Empty triple lists are
  // allowed here so that split partitions and empty training sets can be
  // represented; ingestion enforces non-emptiness.
  ObservationSet(Index n_rows, Index n_cols, std::vector<Triple> triples);

  Index n_rows() const { return n_rows_; }
  Index n_cols() const { return n_cols_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const std::vector<Triple>& triples() const { return triples_; }
  const Triple& operator[](std::size_t i) const { return triples_[i]; }

  // Same shape, selected triples in the given order.
  ObservationSet subset(const std::vector<std::size_t>& indices) const;

  double min_value() const;
  double max_value() const;
  double mean_value() const;

  friend bool operator==(const ObservationSet&, const ObservationSet&) = default;

 private:
  Index n_rows_ = 0;
  Index n_cols_ = 0;
  std::vector<Triple> triples_;
};

// `user<TAB>item<TAB>rating<TAB>timestamp`, 1-based ids, integer ratings 1..5.
ObservationSet ingest_movielens(const std::filesystem::path& path);
ObservationSet parse_movielens(std::istream& in);

// `row<TAB>col<TAB>value`. Ids are 1-based unless a 0 id occurs, in which
// case the file is read as 0-based. With `square` set, N = M.
ObservationSet ingest_edge_list(const std::filesystem::path& path, bool square);
ObservationSet parse_edge_list(std::istream& in, bool square);

// Canonical form: header `#obs N M`, then `row<TAB>col<TAB>value` 0-based with
// shortest round-trip value formatting.
void write_canonical(const ObservationSet& data, std::ostream& out);
void write_canonical(const ObservationSet& data,
                     const std::filesystem::path& path);
ObservationSet read_canonical(std::istream& in);
ObservationSet read_canonical(const std::filesystem::path& path);

struct SplitSpec {
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  int n_repeats = 5;
  std::uint64_t seed = 0;

  // Throws invalid_argument when fractions or repeat count are out of range.
  void validate() const;
};

struct DataSplit {
  ObservationSet train;
  ObservationSet validation;
  ObservationSet test;
  // Indices into the source triples; same order as the partitions above.
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
  std::vector<std::size_t> test_indices;
};

// splitmix64 output function applied to a 64-bit state.
std::uint64_t splitmix64_finalize(std::uint64_t x);
// Seed for an independent stream `stream` derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// floor(fraction * count) robust to representation error in the product.
std::size_t fraction_count(double fraction, std::size_t count);

std::vector<DataSplit> make_splits(const ObservationSet& data,
                                   const SplitSpec& spec);
DataSplit make_split(const ObservationSet& data, const SplitSpec& spec,
                     int repeat);
DataSplit split_from_indices(const ObservationSet& data,
                             std::vector<std::size_t> train,
                             std::vector<std::size_t> validation,
                             std::vector<std::size_t> test);

// Index files: header `#split repeat`, then `part<TAB>index` lines where part
// is one of train/validation/test.
void write_split_indices(const DataSplit& split, int repeat, std::ostream& out);
DataSplit read_split_indices(const ObservationSet& data, std::istream& in);

// Synthetic arrays used for capacity and recovery checks.
struct LowRankSpec {
  Index n_rows = 10;
  Index n_cols = 12;
  Index rank = 2;
  double noise_std = 0.0;
  double observed_fraction = 1.0;
  std::uint64_t seed = 0;
};

// Entries are U_n^T V_m + noise with U, V ~ Normal(0, 1).
ObservationSet synthetic_low_rank(const LowRankSpec& spec);

}  // namespace nnmf
