#include "nnmf/latent_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mlp_batch.hpp"
#include "nnmf/error.hpp"

namespace nnmf {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::dimension, what);
}

template <typename M>
bool finite(const M& m) {
  return m.allFinite();
}

Index as_index(std::uint64_t v) { return static_cast<Index>(v); }

}  // namespace

LatentState::LatentState(const LatentDims& dims)
    : d_prime(dims.d_prime),
      k(dims.k),
      u(RowMatrix::Zero(dims.n_rows, dims.d)),
      v(RowMatrix::Zero(dims.n_cols, dims.d)),
      u_prime(RowMatrix::Zero(dims.n_rows, dims.d_prime * dims.k)),
      v_prime(RowMatrix::Zero(dims.n_cols, dims.d_prime * dims.k)) {
  require(dims.n_rows > 0 && dims.n_cols > 0, "array dimensions must be positive");
  require(dims.d >= 0 && dims.d_prime >= 0 && dims.k >= 1,
          "feature dimensions must satisfy D >= 0, D' >= 0, K >= 1");
  require(dims.input_width() > 0, "network input width 2D + D' must be positive");
}

LatentDims LatentState::dims() const {
  return {u.rows(), v.rows(), u.cols(), d_prime, k};
}

bool LatentState::all_finite() const {
  return finite(u) && finite(v) && finite(u_prime) && finite(v_prime);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

MlpNetwork::MlpNetwork(std::vector<Index> dims) : layer_dims(std::move(dims)) {
  require(layer_dims.size() >= 2, "network needs at least input and output layers");
  require(layer_dims.back() == 1, "network output width must be 1");
  for (auto d : layer_dims) require(d > 0, "layer widths must be positive");
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    weights.push_back(Matrix::Zero(layer_dims[l + 1], layer_dims[l]));
    biases.push_back(Vector::Zero(layer_dims[l + 1]));
  }
}

bool MlpNetwork::all_finite() const {
  for (const auto& w : weights) if (!finite(w)) return false;
  for (const auto& b : biases) if (!finite(b)) return false;
  return true;
}

double MlpNetwork::evaluate(std::span<const double> input) const {
  require(static_cast<Index>(input.size()) == input_width(),
          "input has " + std::to_string(input.size()) + " entries, network expects " +
              std::to_string(input_width()));
  Vector a = Eigen::Map<const Vector>(input.data(), input_width());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Vector z = weights[l] * a + biases[l];
    const bool last = l + 1 == weights.size();
    const auto act = last ? output_activation : hidden_activation;
    if (act == Activation::sigmoid) z = z.unaryExpr(&sigmoid);
    a = std::move(z);
  }
  return a(0);
}

double weight_init_bound(Index n_in, Index n_out) {
  return 4.0 * std::sqrt(6.0) / std::sqrt(static_cast<double>(n_in + n_out));
}

Vector build_input(std::span<const double> u_n, std::span<const double> v_m,
                   std::span<const double> u_prime_n,
                   std::span<const double> v_prime_m, Index d_prime, Index k) {
  require(u_n.size() == v_m.size(), "U_n and V_m lengths differ");
  const auto channel_size = static_cast<std::size_t>(d_prime * k);
  require(u_prime_n.size() == channel_size && v_prime_m.size() == channel_size,
          "U'_n / V'_m must hold D' x K entries");
  const auto d = static_cast<Index>(u_n.size());
  Vector x(2 * d + d_prime);
  for (Index i = 0; i < d; ++i) {
    x(i) = u_n[i];
    x(d + i) = v_m[i];
  }
  for (Index c = 0; c < d_prime; ++c) {
    double p = 0.0;
    for (Index j = 0; j < k; ++j) p += u_prime_n[c * k + j] * v_prime_m[c * k + j];
    x(2 * d + c) = p;
  }
  return x;
}

Vector build_input(const LatentState& s, Index row, Index col) {
  const auto d = static_cast<std::size_t>(s.u.cols());
  const auto w = static_cast<std::size_t>(s.u_prime.cols());
  return build_input({s.u.row(row).data(), d}, {s.v.row(col).data(), d},
                     {s.u_prime.row(row).data(), w},
                     {s.v_prime.row(col).data(), w}, s.d_prime, s.k);
}

double predict(const MlpNetwork& net, const LatentState& state, Index row,
               Index col) {
  if (row < 0 || row >= state.u.rows() || col < 0 || col >= state.v.rows()) {
    throw Error(ErrorCode::index_range,
                "cell (" + std::to_string(row) + ", " + std::to_string(col) +
                    ") outside " + std::to_string(state.u.rows()) + "x" +
                    std::to_string(state.v.rows()));
  }
  const Vector x = build_input(state, row, col);
  return net.evaluate({x.data(), static_cast<std::size_t>(x.size())});
}

std::pair<MlpNetwork, LatentState> init_model(const LatentDims& dims,
                                              std::vector<Index> layer_dims,
                                              const InitSpec& spec) {
  require(spec.feature_std > 0.0, "feature_std must be positive");
  require(!layer_dims.empty() && layer_dims.front() == dims.input_width(),
          "first layer width must equal 2D + D' = " +
              std::to_string(dims.input_width()));
  MlpNetwork net(std::move(layer_dims));
  LatentState state(dims);

  std::mt19937_64 rng(spec.seed);
  for (auto& w : net.weights) {
    const double b = weight_init_bound(w.cols(), w.rows());
    std::uniform_real_distribution<double> uniform(-b, b);
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = uniform(rng);
    }
  }
  std::normal_distribution<double> normal(0.0, spec.feature_std);
  for (auto span : feature_spans(state)) {
    for (double& x : span) x = normal(rng);
  }
  return {std::move(net), std::move(state)};
}

std::vector<Index> layer_dims_for(const LatentDims& dims,
                                  const std::vector<Index>& hidden) {
  std::vector<Index> out{dims.input_width()};
  out.insert(out.end(), hidden.begin(), hidden.end());
  out.push_back(1);
  return out;
}

std::vector<Index> three_hidden_layer_dims() { return {80, 50, 50, 50, 1}; }
std::vector<Index> four_hidden_layer_dims() { return {100, 20, 20, 20, 20, 1}; }

ParamSpans network_spans(MlpNetwork& net) {
  ParamSpans out;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out.push_back(as_span(net.weights[l]));
    out.push_back(as_span(net.biases[l]));
  }
  return out;
}

ParamSpans feature_spans(LatentState& s) {
  return {as_span(s.u), as_span(s.v), as_span(s.u_prime), as_span(s.v_prime)};
}

namespace detail {

Matrix build_input_chunk(const LatentState& s, const ObservationSet& obs,
                         std::size_t begin, std::size_t count) {
  const Index d = s.u.cols();
  const Index dp = s.d_prime;
  const Index k = s.k;
  Matrix x(2 * d + dp, static_cast<Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    const auto& t = obs[begin + j];
    const auto col = static_cast<Index>(j);
    x.col(col).head(d) = s.u.row(t.row).transpose();
    x.col(col).segment(d, d) = s.v.row(t.col).transpose();
    const double* up = s.u_prime.row(t.row).data();
    const double* vp = s.v_prime.row(t.col).data();
    for (Index c = 0; c < dp; ++c) {
      double p = 0.0;
      for (Index i = 0; i < k; ++i) p += up[c * k + i] * vp[c * k + i];
      x(2 * d + c, col) = p;
    }
  }
  return x;
}

void forward_chunk(const MlpNetwork& net, const Matrix& input,
                   std::vector<Matrix>& activations) {
  activations.resize(net.n_layers() + 1);
  activations[0] = input;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    Matrix z = net.weights[l] * activations[l];
    z.colwise() += net.biases[l];
    const bool last = l + 1 == net.n_layers();
    const auto act = last ? net.output_activation : net.hidden_activation;
    if (act == Activation::sigmoid) z = z.unaryExpr(&sigmoid);
    activations[l + 1] = std::move(z);
  }
}

}  // namespace detail

NnmfModel::NnmfModel(MlpNetwork net, LatentState state)
    : net_(std::move(net)), state_(std::move(state)) {
  require(net_.input_width() == state_.dims().input_width(),
          "network input width does not match 2D + D'");
}

std::unique_ptr<NnmfModel> NnmfModel::create(const LatentDims& dims,
                                             const std::vector<Index>& hidden,
                                             const InitSpec& spec) {
  auto [net, state] = init_model(dims, layer_dims_for(dims, hidden), spec);
  return std::make_unique<NnmfModel>(std::move(net), std::move(state));
}

std::unique_ptr<NnmfModel> NnmfModel::from_shape(
    std::span<const std::uint64_t> shape) {
  if (shape.size() < 6) throw Error(ErrorCode::shape, "nnmf shape descriptor too short");
  const LatentDims dims{as_index(shape[0]), as_index(shape[1]), as_index(shape[2]),
                        as_index(shape[3]), as_index(shape[4])};
  const auto n_layers = shape[5];
  if (shape.size() != 6 + n_layers) {
    throw Error(ErrorCode::shape, "nnmf shape descriptor has wrong length");
  }
  std::vector<Index> layer_dims;
  for (std::uint64_t i = 0; i < n_layers; ++i) layer_dims.push_back(as_index(shape[6 + i]));
  return std::make_unique<NnmfModel>(MlpNetwork(std::move(layer_dims)),
                                     LatentState(dims));
}

double NnmfModel::predict(Index row, Index col) const {
  return nnmf::predict(net_, state_, row, col);
}

std::vector<double> NnmfModel::predict_all(const ObservationSet& obs) const {
  check_fits(obs);
  std::vector<double> out;
  out.reserve(obs.size());
  std::vector<Matrix> acts;
  for (std::size_t begin = 0; begin < obs.size(); begin += detail::kChunk) {
    const auto count = std::min(detail::kChunk, obs.size() - begin);
    detail::forward_chunk(net_, detail::build_input_chunk(state_, obs, begin, count),
                          acts);
    const Matrix& y = acts.back();
    for (Index j = 0; j < y.cols(); ++j) out.push_back(y(0, j));
  }
  return out;
}

ParamSpans NnmfModel::parameters(Block block) {
  return block == Block::network ? network_spans(net_) : feature_spans(state_);
}

std::vector<std::uint64_t> NnmfModel::shape() const {
  const auto dims = state_.dims();
  std::vector<std::uint64_t> out{
      static_cast<std::uint64_t>(dims.n_rows), static_cast<std::uint64_t>(dims.n_cols),
      static_cast<std::uint64_t>(dims.d), static_cast<std::uint64_t>(dims.d_prime),
      static_cast<std::uint64_t>(dims.k), net_.layer_dims.size()};
  for (auto d : net_.layer_dims) out.push_back(static_cast<std::uint64_t>(d));
  return out;
}

std::unique_ptr<Model> NnmfModel::clone() const {
  return std::make_unique<NnmfModel>(*this);
}

}  // namespace nnmf
