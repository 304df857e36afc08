#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "nnmf/model.hpp"
#include "nnmf/types.hpp"

namespace nnmf {

struct LatentDims {
  Index n_rows = 0;
  Index n_cols = 0;
  Index d = 10;        // plain features per entity
  Index d_prime = 60;  // product channels
  Index k = 1;         // length of each channel's inner product

  Index input_width() const { return 2 * d + d_prime; }
  friend bool operator==(const LatentDims&, const LatentDims&) = default;
};

// Latent features for every row and column entity.
//
// u(n, :) is U_n and v(m, :) is V_m. The D'xK matrices U'_n and V'_m are
// stored flattened in one row each, entry (d, k) at column d * K + k.
struct LatentState {
  Index d_prime = 0;
  Index k = 1;
  RowMatrix u;
  RowMatrix v;
  RowMatrix u_prime;
  RowMatrix v_prime;

  LatentState() = default;
  explicit LatentState(const LatentDims& dims);

  LatentDims dims() const;
  bool all_finite() const;

  friend bool operator==(const LatentState& a, const LatentState& b) {
    return a.d_prime == b.d_prime && a.k == b.k && a.u == b.u && a.v == b.v &&
           a.u_prime == b.u_prime && a.v_prime == b.v_prime;
  }
};

enum class Activation : std::uint32_t { identity = 0, sigmoid = 1 };

double sigmoid(double z);

// Feed-forward network with sigmoid hidden layers and an affine output.
// weights[l] has shape layer_dims[l+1] x layer_dims[l].
struct MlpNetwork {
  std::vector<Index> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation hidden_activation = Activation::sigmoid;
  Activation output_activation = Activation::identity;

  MlpNetwork() = default;
  // Zero weights and biases.
  explicit MlpNetwork(std::vector<Index> dims);

  std::size_t n_layers() const { return weights.size(); }
  Index input_width() const { return layer_dims.front(); }
  bool all_finite() const;

  // Applies the network to one input vector.
  double evaluate(std::span<const double> input) const;

  friend bool operator==(const MlpNetwork& a, const MlpNetwork& b) {
    return a.layer_dims == b.layer_dims && a.weights == b.weights &&
           a.biases == b.biases && a.hidden_activation == b.hidden_activation &&
           a.output_activation == b.output_activation;
  }
};

struct InitSpec {
  double feature_std = 0.1;
  std::uint64_t seed = 0;
};

// Half-width of the uniform weight initialization for a layer.
double weight_init_bound(Index n_in, Index n_out);

// concat(U_n, V_m, p) with p_d = sum_k U'_n[d, k] * V'_m[d, k].
Vector build_input(std::span<const double> u_n, std::span<const double> v_m,
                   std::span<const double> u_prime_n,
                   std::span<const double> v_prime_m, Index d_prime, Index k);
Vector build_input(const LatentState& state, Index row, Index col);

double predict(const MlpNetwork& net, const LatentState& state, Index row,
               Index col);

std::pair<MlpNetwork, LatentState> init_model(const LatentDims& dims,
                                              std::vector<Index> layer_dims,
                                              const InitSpec& spec);

// Standard layer layouts: three hidden layers of 50 for (D, D') = (10, 60),
// four hidden layers of 20 for (10, 80).
std::vector<Index> layer_dims_for(const LatentDims& dims,
                                  const std::vector<Index>& hidden);
std::vector<Index> three_hidden_layer_dims();
std::vector<Index> four_hidden_layer_dims();

// NNMF behind the generic model interface.
class NnmfModel final : public Model {
 public:
  NnmfModel(MlpNetwork net, LatentState state);

  static std::unique_ptr<NnmfModel> create(const LatentDims& dims,
                                           const std::vector<Index>& hidden,
                                           const InitSpec& spec);
  // Zero-initialized model with the layout described by `shape()` output.
  static std::unique_ptr<NnmfModel> from_shape(
      std::span<const std::uint64_t> shape);

  ModelKind kind() const override { return ModelKind::nnmf; }
  Index n_rows() const override { return state_.u.rows(); }
  Index n_cols() const override { return state_.v.rows(); }

  double predict(Index row, Index col) const override;
  std::vector<double> predict_all(const ObservationSet& obs) const override;
  ParamSpans parameters(Block block) override;
  double backward(const ObservationSet& train, double lambda,
                  Gradient& grad) const override;
  std::vector<std::uint64_t> shape() const override;
  std::unique_ptr<Model> clone() const override;

  const MlpNetwork& network() const { return net_; }
  MlpNetwork& network() { return net_; }
  const LatentState& state() const { return state_; }
  LatentState& state() { return state_; }

 private:
  MlpNetwork net_;
  LatentState state_;
};

// Span views in the canonical order used by NnmfModel::parameters.
ParamSpans network_spans(MlpNetwork& net);
ParamSpans feature_spans(LatentState& state);

}  // namespace nnmf
