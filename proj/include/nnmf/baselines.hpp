#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nnmf/model.hpp"
#include "nnmf/types.hpp"

namespace nnmf {

// Mean U_n^T V_m.
struct PmfState {
  RowMatrix u;
  RowMatrix v;
};

// Mean U_n^T V_m + mu_n + tau_m + beta.
struct BiasedMfState {
  PmfState factors;
  Vector mu;
  Vector tau;
  double beta = 0.0;
};

double pmf_predict(const PmfState& state, Index row, Index col);
double biasedmf_predict(const BiasedMfState& state, Index row, Index col);

class PmfModel final : public Model {
 public:
  explicit PmfModel(PmfState state);
  static std::unique_ptr<PmfModel> create(Index n_rows, Index n_cols, Index d,
                                          double feature_std, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::pmf; }
  Index n_rows() const override { return state_.u.rows(); }
  Index n_cols() const override { return state_.v.rows(); }
  double predict(Index row, Index col) const override;
  ParamSpans parameters(Block block) override;
  double backward(const ObservationSet& train, double lambda,
                  Gradient& grad) const override;
  std::vector<std::uint64_t> shape() const override;
  std::unique_ptr<Model> clone() const override;

  const PmfState& state() const { return state_; }
  PmfState& state() { return state_; }

 private:
  PmfState state_;
};

// Row and column biases are latent features (penalized); the global bias is
// the only network-block parameter.
class BiasedMfModel final : public Model {
 public:
  explicit BiasedMfModel(BiasedMfState state);
  static std::unique_ptr<BiasedMfModel> create(Index n_rows, Index n_cols,
                                               Index d, double feature_std,
                                               double global_bias,
                                               std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::biased_mf; }
  Index n_rows() const override { return state_.factors.u.rows(); }
  Index n_cols() const override { return state_.factors.v.rows(); }
  double predict(Index row, Index col) const override;
  ParamSpans parameters(Block block) override;
  double backward(const ObservationSet& train, double lambda,
                  Gradient& grad) const override;
  std::vector<std::uint64_t> shape() const override;
  std::unique_ptr<Model> clone() const override;

  const BiasedMfState& state() const { return state_; }
  BiasedMfState& state() { return state_; }

 private:
  BiasedMfState state_;
};

// Neural tensor network:
//   z_h = U_n^T Q^h V_m + (W [U_n; V_m])_h + b_h,   y = a^T tanh(z).
// With output_sigmoid the prediction is offset + scale * sigmoid(y), which
// maps the unit interval onto the rating range; otherwise it is y.
struct NtnParams {
  RowMatrix u;  // N x D
  RowMatrix v;  // M x D
  Matrix q;     // D x (D * H); slice h is columns [h*D, (h+1)*D)
  Matrix w;     // H x 2D
  Vector b;     // H
  Vector a;     // H
  bool output_sigmoid = false;
  double output_offset = 0.0;
  double output_scale = 1.0;

  Index d() const { return u.cols(); }
  Index hidden() const { return b.size(); }
  auto slice(Index h) const { return q.middleCols(h * d(), d()); }
};

double ntn_predict(const NtnParams& model, Index row, Index col);

class NtnModel final : public Model {
 public:
  explicit NtnModel(NtnParams params);
  static std::unique_ptr<NtnModel> create(Index n_rows, Index n_cols, Index d,
                                          Index hidden, double feature_std,
                                          std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::ntn; }
  Index n_rows() const override { return params_.u.rows(); }
  Index n_cols() const override { return params_.v.rows(); }
  double predict(Index row, Index col) const override;
  std::vector<double> predict_all(const ObservationSet& obs) const override;
  ParamSpans parameters(Block block) override;
  double backward(const ObservationSet& train, double lambda,
                  Gradient& grad) const override;
  std::vector<std::uint64_t> shape() const override;
  std::unique_ptr<Model> clone() const override;

  const NtnParams& params() const { return params_; }
  NtnParams& params() { return params_; }

 private:
  NtnParams params_;
};

// Writes an NNMF first layer as a tensor product over padded features
//   Ubar_n = [U_n; 1_D; U'_n],  Vbar_m = [1_D; V_m; V'_m],
// with diagonal slices Q^h_ii = W'_{h,i}. Only defined for K = 1.
struct NtnEmbedding {
  Index d = 0;
  Index d_prime = 0;
  Matrix q;  // L x (L * H), L = 2D + D'

  Index width() const { return 2 * d + d_prime; }
  Index hidden() const { return q.cols() / width(); }

  Vector pad_row(std::span<const double> u_n, std::span<const double> u_prime_n) const;
  Vector pad_col(std::span<const double> v_m, std::span<const double> v_prime_m) const;
  // (Ubar^T Q^h Vbar)_h for every slice.
  Vector pre_activation(const Vector& row_padded, const Vector& col_padded) const;
};

NtnEmbedding embed_nnmf_first_layer(const Matrix& first_layer_weights, Index d,
                                    Index d_prime, Index k = 1);

}  // namespace nnmf
