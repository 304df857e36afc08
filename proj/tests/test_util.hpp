#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nnmf/data.hpp"
#include "nnmf/factory.hpp"
#include "nnmf/latent_model.hpp"
#include "nnmf/model.hpp"

namespace nnmf::testing {

// Random observations on an n x m grid, each cell kept with probability
// `density`, values uniform in [lo, hi]. Never empty.
inline ObservationSet random_observations(Index n, Index m, double density,
                                          std::uint64_t seed, double lo = -1.0,
                                          double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> value(lo, hi);
  std::vector<Triple> triples;
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < m; ++c) {
      if (unit(rng) < density) triples.push_back({r, c, value(rng)});
    }
  }
  if (triples.empty()) triples.push_back({0, 0, value(rng)});
  return ObservationSet(n, m, std::move(triples));
}

// The tiny gradient-check instance: N = M = 3, D = 2, D' = 3, K = 1, one
// hidden layer of 4 units (D = 2 and H = 4 for the baselines).
inline ModelConfig tiny_config(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.d = 2;
  c.d_prime = 3;
  c.k = 1;
  c.hidden = {4};
  c.rank = 2;
  c.ntn_hidden = 4;
  c.feature_std = 0.5;  // larger than the default so every path is exercised
  return c;
}

// Plain-loop NNMF forward pass, written independently of the Eigen path.
inline double reference_predict(const MlpNetwork& net, const LatentState& s,
                                Index row, Index col) {
  const Index d = s.u.cols();
  std::vector<double> a;
  for (Index i = 0; i < d; ++i) a.push_back(s.u(row, i));
  for (Index i = 0; i < d; ++i) a.push_back(s.v(col, i));
  for (Index c = 0; c < s.d_prime; ++c) {
    double p = 0.0;
    for (Index k = 0; k < s.k; ++k) {
      p += s.u_prime(row, c * s.k + k) * s.v_prime(col, c * s.k + k);
    }
    a.push_back(p);
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Index i = 0; i < w.rows(); ++i) {
      double z = net.biases[l](i);
      for (Index j = 0; j < w.cols(); ++j) z += w(i, j) * a[static_cast<std::size_t>(j)];
      const bool last = l + 1 == net.weights.size();
      next[static_cast<std::size_t>(i)] = last ? z : 1.0 / (1.0 + std::exp(-z));
    }
    a = std::move(next);
  }
  return a[0];
}

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "nnmf_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Bitwise snapshot of a parameter block.
inline std::vector<std::vector<double>> snapshot(const Model& model, Block block) {
  std::vector<std::vector<double>> out;
  for (auto s : model.parameters(block)) out.emplace_back(s.begin(), s.end());
  return out;
}

inline bool bit_equal(const std::vector<std::vector<double>>& a,
                      const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      if (std::bit_cast<std::uint64_t>(a[i][j]) != std::bit_cast<std::uint64_t>(b[i][j])) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace nnmf::testing
