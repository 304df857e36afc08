#include "nnmf/baselines.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "nnmf/error.hpp"
#include "nnmf/latent_model.hpp"

namespace nnmf {

namespace {

void range_check(Index row, Index col, Index n_rows, Index n_cols) {
  if (row < 0 || row >= n_rows || col < 0 || col >= n_cols) {
    throw Error(ErrorCode::index_range,
                "cell (" + std::to_string(row) + ", " + std::to_string(col) +
                    ") outside " + std::to_string(n_rows) + "x" +
                    std::to_string(n_cols));
  }
}

void fill_normal(RowMatrix& m, std::normal_distribution<double>& normal,
                 std::mt19937_64& rng) {
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
}

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng);
}

void fill_uniform(Vector& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (Index i = 0; i < v.size(); ++i) v(i) = uniform(rng);
}

Gradient zero_gradient(const Model& model) {
  Gradient g;
  g.network = zeros_like(model.parameters(Block::network));
  g.features = zeros_like(model.parameters(Block::features));
  return g;
}

double finish(const Model& model, double sse, double lambda, Gradient& grad) {
  const double penalty = add_feature_penalty(model, lambda, grad);
  check_finite(grad, to_string(model.kind()));
  return sse + penalty;
}

void check_lambda(double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
}

using RowMap = Eigen::Map<Eigen::Matrix<double, 1, Eigen::Dynamic>>;

RowMap row_of(std::vector<double>& flat, Index row, Index width) {
  return RowMap(flat.data() + row * width, width);
}

}  // namespace

// PMF ----------------------------------------------------------------------

double pmf_predict(const PmfState& s, Index row, Index col) {
  range_check(row, col, s.u.rows(), s.v.rows());
  return s.u.row(row).dot(s.v.row(col));
}

PmfModel::PmfModel(PmfState state) : state_(std::move(state)) {
  if (state_.u.cols() != state_.v.cols()) {
    throw Error(ErrorCode::dimension, "U and V must have the same rank");
  }
}

std::unique_ptr<PmfModel> PmfModel::create(Index n_rows, Index n_cols, Index d,
                                           double feature_std,
                                           std::uint64_t seed) {
  if (n_rows <= 0 || n_cols <= 0 || d <= 0) {
    throw Error(ErrorCode::dimension, "PMF dimensions must be positive");
  }
  PmfState s{RowMatrix(n_rows, d), RowMatrix(n_cols, d)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, feature_std);
  fill_normal(s.u, normal, rng);
  fill_normal(s.v, normal, rng);
  return std::make_unique<PmfModel>(std::move(s));
}

double PmfModel::predict(Index row, Index col) const {
  return pmf_predict(state_, row, col);
}

ParamSpans PmfModel::parameters(Block block) {
  if (block == Block::network) return {};
  return {as_span(state_.u), as_span(state_.v)};
}

double PmfModel::backward(const ObservationSet& train, double lambda,
                          Gradient& grad) const {
  check_lambda(lambda);
  check_fits(train);
  grad = zero_gradient(*this);
  const Index d = state_.u.cols();
  double sse = 0.0;
  for (const auto& t : train.triples()) {
    const double r = state_.u.row(t.row).dot(state_.v.row(t.col)) - t.value;
    sse += r * r;
    row_of(grad.features[0], t.row, d) += 2.0 * r * state_.v.row(t.col);
    row_of(grad.features[1], t.col, d) += 2.0 * r * state_.u.row(t.row);
  }
  return finish(*this, sse, lambda, grad);
}

std::vector<std::uint64_t> PmfModel::shape() const {
  return {static_cast<std::uint64_t>(n_rows()), static_cast<std::uint64_t>(n_cols()),
          static_cast<std::uint64_t>(state_.u.cols())};
}

std::unique_ptr<Model> PmfModel::clone() const {
  return std::make_unique<PmfModel>(*this);
}

// BiasedMF -----------------------------------------------------------------

double biasedmf_predict(const BiasedMfState& s, Index row, Index col) {
  range_check(row, col, s.factors.u.rows(), s.factors.v.rows());
  return s.factors.u.row(row).dot(s.factors.v.row(col)) + s.mu(row) + s.tau(col) +
         s.beta;
}

BiasedMfModel::BiasedMfModel(BiasedMfState state) : state_(std::move(state)) {
  if (state_.factors.u.cols() != state_.factors.v.cols() ||
      state_.mu.size() != state_.factors.u.rows() ||
      state_.tau.size() != state_.factors.v.rows()) {
    throw Error(ErrorCode::dimension, "BiasedMF parameter shapes are inconsistent");
  }
}

std::unique_ptr<BiasedMfModel> BiasedMfModel::create(Index n_rows, Index n_cols,
                                                     Index d, double feature_std,
                                                     double global_bias,
                                                     std::uint64_t seed) {
  auto pmf = PmfModel::create(n_rows, n_cols, d, feature_std, seed);
  BiasedMfState s{pmf->state(), Vector::Zero(n_rows), Vector::Zero(n_cols),
                  global_bias};
  return std::make_unique<BiasedMfModel>(std::move(s));
}

double BiasedMfModel::predict(Index row, Index col) const {
  return biasedmf_predict(state_, row, col);
}

ParamSpans BiasedMfModel::parameters(Block block) {
  if (block == Block::network) return {std::span<double>(&state_.beta, 1)};
  return {as_span(state_.factors.u), as_span(state_.factors.v), as_span(state_.mu),
          as_span(state_.tau)};
}

double BiasedMfModel::backward(const ObservationSet& train, double lambda,
                               Gradient& grad) const {
  check_lambda(lambda);
  check_fits(train);
  grad = zero_gradient(*this);
  const auto& u = state_.factors.u;
  const auto& v = state_.factors.v;
  const Index d = u.cols();
  double sse = 0.0;
  for (const auto& t : train.triples()) {
    const double r = u.row(t.row).dot(v.row(t.col)) + state_.mu(t.row) +
                     state_.tau(t.col) + state_.beta - t.value;
    sse += r * r;
    row_of(grad.features[0], t.row, d) += 2.0 * r * v.row(t.col);
    row_of(grad.features[1], t.col, d) += 2.0 * r * u.row(t.row);
    grad.features[2][t.row] += 2.0 * r;
    grad.features[3][t.col] += 2.0 * r;
    grad.network[0][0] += 2.0 * r;
  }
  return finish(*this, sse, lambda, grad);
}

std::vector<std::uint64_t> BiasedMfModel::shape() const {
  return {static_cast<std::uint64_t>(n_rows()), static_cast<std::uint64_t>(n_cols()),
          static_cast<std::uint64_t>(state_.factors.u.cols())};
}

std::unique_ptr<Model> BiasedMfModel::clone() const {
  return std::make_unique<BiasedMfModel>(*this);
}

// NTN ----------------------------------------------------------------------

namespace {

struct NtnForward {
  Vector z;      // pre-activations
  Vector t;      // tanh(z)
  double y = 0;  // a^T t
  double out = 0;
  double prediction = 0;
};

// `row_q` is Q^T U_n, so entry h*D + j is (U_n^T Q^h)_j.
NtnForward ntn_forward(const NtnParams& p, const Vector& row_q, Index row,
                       Index col) {
  const Index d = p.d();
  const Index h_count = p.hidden();
  NtnForward f;
  const auto u_n = p.u.row(row).transpose();
  const auto v_m = p.v.row(col).transpose();
  const Eigen::Map<const Matrix> per_slice(row_q.data(), d, h_count);
  f.z = per_slice.transpose() * v_m + p.w.leftCols(d) * u_n +
        p.w.rightCols(d) * v_m + p.b;
  f.t = f.z.array().tanh();
  f.y = p.a.dot(f.t);
  f.out = p.output_sigmoid ? sigmoid(f.y) : f.y;
  f.prediction = p.output_sigmoid ? p.output_offset + p.output_scale * f.out : f.out;
  return f;
}

}  // namespace

double ntn_predict(const NtnParams& p, Index row, Index col) {
  range_check(row, col, p.u.rows(), p.v.rows());
  const Vector row_q = p.q.transpose() * p.u.row(row).transpose();
  return ntn_forward(p, row_q, row, col).prediction;
}

NtnModel::NtnModel(NtnParams params) : params_(std::move(params)) {
  const Index d = params_.d();
  const Index h = params_.hidden();
  if (h < 1 || params_.v.cols() != d || params_.q.rows() != d ||
      params_.q.cols() != d * h || params_.w.rows() != h ||
      params_.w.cols() != 2 * d || params_.a.size() != h) {
    throw Error(ErrorCode::dimension, "NTN parameter shapes are inconsistent");
  }
}

std::unique_ptr<NtnModel> NtnModel::create(Index n_rows, Index n_cols, Index d,
                                           Index hidden, double feature_std,
                                           std::uint64_t seed) {
  if (n_rows <= 0 || n_cols <= 0 || d <= 0 || hidden <= 0) {
    throw Error(ErrorCode::dimension, "NTN dimensions must be positive");
  }
  NtnParams p;
  p.u.resize(n_rows, d);
  p.v.resize(n_cols, d);
  p.q.resize(d, d * hidden);
  p.w.resize(hidden, 2 * d);
  p.b = Vector::Zero(hidden);
  p.a.resize(hidden);
  std::mt19937_64 rng(seed);
  fill_uniform(p.w, weight_init_bound(2 * d, hidden), rng);
  fill_uniform(p.q, weight_init_bound(2 * d, hidden), rng);
  fill_uniform(p.a, weight_init_bound(hidden, 1), rng);
  std::normal_distribution<double> normal(0.0, feature_std);
  fill_normal(p.u, normal, rng);
  fill_normal(p.v, normal, rng);
  return std::make_unique<NtnModel>(std::move(p));
}

double NtnModel::predict(Index row, Index col) const {
  return ntn_predict(params_, row, col);
}

std::vector<double> NtnModel::predict_all(const ObservationSet& obs) const {
  check_fits(obs);
  std::vector<double> out(obs.size());
  // Cache Q^T U_n across consecutive observations of the same row.
  Index cached_row = -1;
  Vector row_q;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& t = obs[i];
    if (t.row != cached_row) {
      row_q = params_.q.transpose() * params_.u.row(t.row).transpose();
      cached_row = t.row;
    }
    out[i] = ntn_forward(params_, row_q, t.row, t.col).prediction;
  }
  return out;
}

ParamSpans NtnModel::parameters(Block block) {
  if (block == Block::network) {
    return {as_span(params_.q), as_span(params_.w), as_span(params_.b),
            as_span(params_.a)};
  }
  return {as_span(params_.u), as_span(params_.v)};
}

double NtnModel::backward(const ObservationSet& train, double lambda,
                          Gradient& grad) const {
  check_lambda(lambda);
  check_fits(train);
  grad = zero_gradient(*this);
  const auto& p = params_;
  const Index d = p.d();
  const Index h_count = p.hidden();

  Eigen::Map<Matrix> g_q(grad.network[0].data(), d, d * h_count);
  Eigen::Map<Matrix> g_w(grad.network[1].data(), h_count, 2 * d);
  Eigen::Map<Vector> g_b(grad.network[2].data(), h_count);
  Eigen::Map<Vector> g_a(grad.network[3].data(), h_count);

  // Observations grouped by row (stable), so per-row tensor work is shared.
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return train[x].row < train[y].row;
  });

  double sse = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const Index row = train[order[pos]].row;
    const Vector u_n = p.u.row(row).transpose();
    const Vector row_q = p.q.transpose() * u_n;
    const Eigen::Map<const Matrix> per_slice(row_q.data(), d, h_count);
    // Sum over this row's observations of V_m dz^T.
    Matrix v_dz = Matrix::Zero(d, h_count);
    Vector g_u = Vector::Zero(d);
    for (; pos < order.size() && train[order[pos]].row == row; ++pos) {
      const auto& t = train[order[pos]];
      const auto f = ntn_forward(p, row_q, row, t.col);
      const double r = f.prediction - t.value;
      sse += r * r;
      double dy = 2.0 * r;
      if (p.output_sigmoid) dy *= p.output_scale * f.out * (1.0 - f.out);
      g_a += dy * f.t;
      const Vector dz = dy * p.a.cwiseProduct((1.0 - f.t.array().square()).matrix());
      g_b += dz;
      const Vector v_m = p.v.row(t.col).transpose();
      g_w.leftCols(d) += dz * u_n.transpose();
      g_w.rightCols(d) += dz * v_m.transpose();
      g_u += p.w.leftCols(d).transpose() * dz;
      row_of(grad.features[1], t.col, d) +=
          (per_slice * dz + p.w.rightCols(d).transpose() * dz).transpose();
      v_dz += v_m * dz.transpose();
    }
    const Eigen::Map<const Vector> v_dz_flat(v_dz.data(), d * h_count);
    g_q += u_n * v_dz_flat.transpose();
    g_u += p.q * v_dz_flat;
    row_of(grad.features[0], row, d) += g_u.transpose();
  }
  return finish(*this, sse, lambda, grad);
}

std::vector<std::uint64_t> NtnModel::shape() const {
  return {static_cast<std::uint64_t>(n_rows()), static_cast<std::uint64_t>(n_cols()),
          static_cast<std::uint64_t>(params_.d()),
          static_cast<std::uint64_t>(params_.hidden()),
          static_cast<std::uint64_t>(params_.output_sigmoid ? 1 : 0),
          std::bit_cast<std::uint64_t>(params_.output_offset),
          std::bit_cast<std::uint64_t>(params_.output_scale)};
}

std::unique_ptr<Model> NtnModel::clone() const {
  return std::make_unique<NtnModel>(*this);
}

// First-layer embedding ----------------------------------------------------

Vector NtnEmbedding::pad_row(std::span<const double> u_n,
                             std::span<const double> u_prime_n) const {
  if (static_cast<Index>(u_n.size()) != d ||
      static_cast<Index>(u_prime_n.size()) != d_prime) {
    throw Error(ErrorCode::dimension, "row features do not match the embedding");
  }
  Vector out(width());
  for (Index i = 0; i < d; ++i) {
    out(i) = u_n[i];
    out(d + i) = 1.0;
  }
  for (Index i = 0; i < d_prime; ++i) out(2 * d + i) = u_prime_n[i];
  return out;
}

Vector NtnEmbedding::pad_col(std::span<const double> v_m,
                             std::span<const double> v_prime_m) const {
  if (static_cast<Index>(v_m.size()) != d ||
      static_cast<Index>(v_prime_m.size()) != d_prime) {
    throw Error(ErrorCode::dimension, "column features do not match the embedding");
  }
  Vector out(width());
  for (Index i = 0; i < d; ++i) {
    out(i) = 1.0;
    out(d + i) = v_m[i];
  }
  for (Index i = 0; i < d_prime; ++i) out(2 * d + i) = v_prime_m[i];
  return out;
}

Vector NtnEmbedding::pre_activation(const Vector& row_padded,
                                    const Vector& col_padded) const {
  const Index l = width();
  Vector out(hidden());
  for (Index h = 0; h < hidden(); ++h) {
    out(h) = row_padded.dot(q.middleCols(h * l, l) * col_padded);
  }
  return out;
}

NtnEmbedding embed_nnmf_first_layer(const Matrix& first_layer_weights, Index d,
                                    Index d_prime, Index k) {
  if (k != 1) {
    throw Error(ErrorCode::unsupported,
                "first-layer embedding requires K = 1, got K = " + std::to_string(k));
  }
  const Index l = 2 * d + d_prime;
  if (first_layer_weights.cols() != l) {
    throw Error(ErrorCode::dimension, "first-layer weights must have 2D + D' columns");
  }
  const Index h_count = first_layer_weights.rows();
  NtnEmbedding e{d, d_prime, Matrix::Zero(l, l * h_count)};
  for (Index h = 0; h < h_count; ++h) {
    for (Index i = 0; i < l; ++i) e.q(i, h * l + i) = first_layer_weights(h, i);
  }
  return e;
}

}  // namespace nnmf
