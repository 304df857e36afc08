#include "nnmf/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlp_batch.hpp"
#include "nnmf/error.hpp"

namespace nnmf {

namespace {

GradientBundle zero_bundle(const MlpNetwork& net, const LatentState& state) {
  GradientBundle g{MlpNetwork(net.layer_dims), LatentState(state.dims())};
  g.network.hidden_activation = net.hidden_activation;
  g.network.output_activation = net.output_activation;
  return g;
}

void check_shapes(const MlpNetwork& net, const LatentState& state,
                  const ObservationSet& train, double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  if (net.input_width() != state.dims().input_width()) {
    throw Error(ErrorCode::dimension, "network input width does not match 2D + D'");
  }
  if (train.n_rows() != state.u.rows() || train.n_cols() != state.v.rows()) {
    throw Error(ErrorCode::shape, "observation array shape does not match features");
  }
}

// Throws numerical with the location of the first non-finite gradient entry.
void check_bundle(const GradientBundle& g) {
  const auto fail = [](const std::string& where) {
    throw Error(ErrorCode::numerical, "non-finite gradient at " + where);
  };
  for (std::size_t l = 0; l < g.network.weights.size(); ++l) {
    const auto& w = g.network.weights[l];
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j)
        if (!std::isfinite(w(i, j)))
          fail("weights[" + std::to_string(l) + "](" + std::to_string(i) + ", " +
               std::to_string(j) + ")");
    const auto& b = g.network.biases[l];
    for (Index i = 0; i < b.size(); ++i)
      if (!std::isfinite(b(i)))
        fail("biases[" + std::to_string(l) + "](" + std::to_string(i) + ")");
  }
  const auto scan = [&](const RowMatrix& m, const char* name) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j)
        if (!std::isfinite(m(i, j)))
          fail(std::string(name) + "(" + std::to_string(i) + ", " +
               std::to_string(j) + ")");
  };
  scan(g.features.u, "U");
  scan(g.features.v, "V");
  scan(g.features.u_prime, "U'");
  scan(g.features.v_prime, "V'");
}

double penalty(const LatentState& s) {
  return s.u.squaredNorm() + s.v.squaredNorm() + s.u_prime.squaredNorm() +
         s.v_prime.squaredNorm();
}

double activation_derivative_from_output(Activation act, double y) {
  return act == Activation::sigmoid ? y * (1.0 - y) : 1.0;
}

}  // namespace

double objective(const MlpNetwork& net, const LatentState& state,
                 const ObservationSet& train, double lambda) {
  check_shapes(net, state, train, lambda);
  double sse = 0.0;
  std::vector<Matrix> acts;
  for (std::size_t begin = 0; begin < train.size(); begin += detail::kChunk) {
    const auto count = std::min(detail::kChunk, train.size() - begin);
    detail::forward_chunk(net, detail::build_input_chunk(state, train, begin, count),
                          acts);
    for (std::size_t j = 0; j < count; ++j) {
      const double r = train[begin + j].value - acts.back()(0, static_cast<Index>(j));
      sse += r * r;
    }
  }
  return sse + lambda * penalty(state);
}

std::pair<GradientBundle, double> backward(const MlpNetwork& net,
                                           const LatentState& state,
                                           const ObservationSet& train,
                                           double lambda) {
  check_shapes(net, state, train, lambda);
  GradientBundle g = zero_bundle(net, state);
  const Index d = state.u.cols();
  const Index dp = state.d_prime;
  const Index k = state.k;
  const std::size_t n_layers = net.n_layers();

  double sse = 0.0;
  std::vector<Matrix> acts;
  for (std::size_t begin = 0; begin < train.size(); begin += detail::kChunk) {
    const auto count = std::min(detail::kChunk, train.size() - begin);
    detail::forward_chunk(net, detail::build_input_chunk(state, train, begin, count),
                          acts);

    // delta = dObjective / d(pre-activation) of the current layer.
    Matrix delta(1, static_cast<Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      const double y = acts.back()(0, static_cast<Index>(j));
      const double r = y - train[begin + j].value;
      sse += r * r;
      delta(0, static_cast<Index>(j)) =
          2.0 * r * activation_derivative_from_output(net.output_activation, y);
    }
    for (std::size_t l = n_layers; l-- > 0;) {
      g.network.weights[l].noalias() += delta * acts[l].transpose();
      g.network.biases[l] += delta.rowwise().sum();
      Matrix upstream = net.weights[l].transpose() * delta;
      if (l > 0) {
        const Matrix& a = acts[l];
        if (net.hidden_activation == Activation::sigmoid) {
          upstream.array() *= a.array() * (1.0 - a.array());
        }
      }
      delta = std::move(upstream);
    }

    // delta now holds dObjective / d(input) per observation column.
    for (std::size_t j = 0; j < count; ++j) {
      const auto& t = train[begin + j];
      const auto col = static_cast<Index>(j);
      g.features.u.row(t.row) += delta.col(col).head(d).transpose();
      g.features.v.row(t.col) += delta.col(col).segment(d, d).transpose();
      const double* up = state.u_prime.row(t.row).data();
      const double* vp = state.v_prime.row(t.col).data();
      double* gup = g.features.u_prime.row(t.row).data();
      double* gvp = g.features.v_prime.row(t.col).data();
      for (Index c = 0; c < dp; ++c) {
        const double dc = delta(2 * d + c, col);
        for (Index i = 0; i < k; ++i) {
          gup[c * k + i] += dc * vp[c * k + i];
          gvp[c * k + i] += dc * up[c * k + i];
        }
      }
    }
  }

  g.features.u += 2.0 * lambda * state.u;
  g.features.v += 2.0 * lambda * state.v;
  g.features.u_prime += 2.0 * lambda * state.u_prime;
  g.features.v_prime += 2.0 * lambda * state.v_prime;
  check_bundle(g);
  return {std::move(g), sse + lambda * penalty(state)};
}

GradientBundle finite_diff_gradient(const MlpNetwork& net,
                                    const LatentState& state,
                                    const ObservationSet& train, double lambda,
                                    double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "step h must be positive");
  check_shapes(net, state, train, lambda);
  MlpNetwork work_net = net;
  LatentState work_state = state;
  GradientBundle g = zero_bundle(net, state);

  const auto differentiate = [&](ParamSpans params, ParamSpans out) {
    for (std::size_t s = 0; s < params.size(); ++s) {
      for (std::size_t i = 0; i < params[s].size(); ++i) {
        double& p = params[s][i];
        const double saved = p;
        p = saved + h;
        const double up = objective(work_net, work_state, train, lambda);
        p = saved - h;
        const double down = objective(work_net, work_state, train, lambda);
        p = saved;
        out[s][i] = (up - down) / (2.0 * h);
      }
    }
  };
  differentiate(network_spans(work_net), network_spans(g.network));
  differentiate(feature_spans(work_state), feature_spans(g.features));
  return g;
}

Gradient finite_diff_gradient(const Model& model, const ObservationSet& train,
                              double lambda, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_argument, "step h must be positive");
  auto work = model.clone();
  Gradient g;
  for (auto block : {Block::network, Block::features}) {
    auto params = work->parameters(block);
    auto& out = g.block(block);
    out = zeros_like(const_spans(params));
    for (std::size_t s = 0; s < params.size(); ++s) {
      for (std::size_t i = 0; i < params[s].size(); ++i) {
        double& p = params[s][i];
        const double saved = p;
        p = saved + h;
        const double up = work->objective(train, lambda);
        p = saved - h;
        const double down = work->objective(train, lambda);
        p = saved;
        out[s][i] = (up - down) / (2.0 * h);
      }
    }
  }
  return g;
}

Gradient to_gradient(GradientBundle& bundle) {
  Gradient out;
  for (auto s : network_spans(bundle.network)) out.network.emplace_back(s.begin(), s.end());
  for (auto s : feature_spans(bundle.features)) out.features.emplace_back(s.begin(), s.end());
  return out;
}

double max_relative_error(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b,
                          double floor) {
  if (a.size() != b.size()) throw Error(ErrorCode::dimension, "gradient layouts differ");
  double worst = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].size() != b[s].size()) throw Error(ErrorCode::dimension, "gradient layouts differ");
    for (std::size_t i = 0; i < a[s].size(); ++i) {
      const double denom = std::max({std::abs(a[s][i]), std::abs(b[s][i]), floor});
      worst = std::max(worst, std::abs(a[s][i] - b[s][i]) / denom);
    }
  }
  return worst;
}

double NnmfModel::backward(const ObservationSet& train, double lambda,
                           Gradient& grad) const {
  auto [bundle, value] = nnmf::backward(net_, state_, train, lambda);
  grad = to_gradient(bundle);
  return value;
}

}  // namespace nnmf
