#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnmf/data.hpp"
#include "nnmf/types.hpp"

namespace nnmf {

enum class ModelKind : std::uint32_t {
  nnmf = 1,
  pmf = 2,
  biased_mf = 3,
  ntn = 4,
};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

// Parameters split into the two alternation blocks: the prediction function's
// own weights (never penalized) and the per-entity latent features (penalized
// by lambda * squared norm).
enum class Block { network, features };

// Flat gradient storage mirroring Model::parameters() span by span.
struct Gradient {
  std::vector<std::vector<double>> network;
  std::vector<std::vector<double>> features;

  std::vector<std::vector<double>>& block(Block b) {
    return b == Block::network ? network : features;
  }
  const std::vector<std::vector<double>>& block(Block b) const {
    return b == Block::network ? network : features;
  }
};

// Copies `spans` into a zero-initialized gradient block of identical layout.
std::vector<std::vector<double>> zeros_like(const ConstParamSpans& spans);

class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual Index n_rows() const = 0;
  virtual Index n_cols() const = 0;

  // Prediction for one cell; throws index_range outside the array.
  virtual double predict(Index row, Index col) const = 0;

  // Predictions for every triple of `obs` in order.
  virtual std::vector<double> predict_all(const ObservationSet& obs) const;

  virtual ParamSpans parameters(Block block) = 0;
  ConstParamSpans parameters(Block block) const;

  // Exact gradient of the penalized squared-error objective; returns the
  // objective value. Rows/columns absent from `train` get only the penalty
  // gradient. Throws numerical on a non-finite gradient entry.
  virtual double backward(const ObservationSet& train, double lambda,
                          Gradient& grad) const = 0;

  // Objective without gradients.
  double objective(const ObservationSet& train, double lambda) const;

  // Shape descriptor written to checkpoints; equal shapes imply equal
  // parameter layouts.
  virtual std::vector<std::uint64_t> shape() const = 0;

  virtual std::unique_ptr<Model> clone() const = 0;

  // Validates shape compatibility with an observation set.
  void check_fits(const ObservationSet& obs) const;

 protected:
  void check_index(Index row, Index col) const;
};

// Sum of squared feature entries, the bracketed penalty term.
double feature_penalty(const Model& model);

// Throws numerical naming the first non-finite entry of the gradient.
void check_finite(const Gradient& grad, std::string_view model_name);

// Adds 2*lambda*features to the feature block of `grad` and returns
// lambda * penalty.
double add_feature_penalty(const Model& model, double lambda, Gradient& grad);

}  // namespace nnmf
