#pragma once

#include <utility>

#include "nnmf/data.hpp"
#include "nnmf/latent_model.hpp"
#include "nnmf/model.hpp"

namespace nnmf {

// Gradient of the NNMF objective, shaped exactly like the parameters:
// network.weights[l] holds dObjective/dW_l, features.u holds dObjective/dU.
struct GradientBundle {
  MlpNetwork network;
  LatentState features;
};

// Sum of squared residuals over `train` plus lambda times the squared norms
// of all latent features. Network weights are not penalized.
double objective(const MlpNetwork& net, const LatentState& state,
                 const ObservationSet& train, double lambda);

// Reverse-mode gradient of objective(); accumulation follows the order of
// `train`, so results are bit-reproducible.
std::pair<GradientBundle, double> backward(const MlpNetwork& net,
                                           const LatentState& state,
                                           const ObservationSet& train,
                                           double lambda);

// Central differences over every scalar parameter; throws invalid_argument
// unless h > 0.
GradientBundle finite_diff_gradient(const MlpNetwork& net,
                                    const LatentState& state,
                                    const ObservationSet& train, double lambda,
                                    double h);

// Same oracle for any model through Model::objective.
Gradient finite_diff_gradient(const Model& model, const ObservationSet& train,
                              double lambda, double h);

// Flattened view of a bundle in NnmfModel::parameters order.
Gradient to_gradient(GradientBundle& bundle);

// max |a - b| / max(|a|, |b|, floor) over the block.
double max_relative_error(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b,
                          double floor = 1e-8);

}  // namespace nnmf
