#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nnmf/model.hpp"

namespace nnmf {

// Architecture and initialization for any model kind.
struct ModelConfig {
  ModelKind kind = ModelKind::nnmf;
  // NNMF
  Index d = 10;
  Index d_prime = 60;
  Index k = 1;
  std::vector<Index> hidden{50, 50, 50};
  // PMF, BiasedMF and NTN feature rank
  Index rank = 60;
  // NTN
  Index ntn_hidden = 50;
  bool ntn_output_sigmoid = false;
  double ntn_output_min = 0.0;
  double ntn_output_max = 1.0;

  double feature_std = 0.1;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// `global_mean` seeds the BiasedMF global bias; other kinds ignore it.
std::unique_ptr<Model> make_model(const ModelConfig& config, Index n_rows,
                                  Index n_cols, double global_mean,
                                  std::uint64_t seed);

// Zero-parameter model with the layout named by a checkpoint shape.
std::unique_ptr<Model> model_from_shape(ModelKind kind,
                                        std::span<const std::uint64_t> shape);

}  // namespace nnmf
