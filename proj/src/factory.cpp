#include "nnmf/factory.hpp"

#include <bit>
#include <string>

#include "nnmf/baselines.hpp"
#include "nnmf/error.hpp"
#include "nnmf/latent_model.hpp"

namespace nnmf {

namespace {

Index idx(std::uint64_t v) { return static_cast<Index>(v); }

void expect_length(std::span<const std::uint64_t> shape, std::size_t n,
                   ModelKind kind) {
  if (shape.size() != n) {
    throw Error(ErrorCode::shape, std::string(to_string(kind)) +
                                      " shape descriptor has wrong length");
  }
}

}  // namespace

std::unique_ptr<Model> make_model(const ModelConfig& c, Index n_rows,
                                  Index n_cols, double global_mean,
                                  std::uint64_t seed) {
  switch (c.kind) {
    case ModelKind::nnmf:
      return NnmfModel::create({n_rows, n_cols, c.d, c.d_prime, c.k}, c.hidden,
                               {c.feature_std, seed});
    case ModelKind::pmf:
      return PmfModel::create(n_rows, n_cols, c.rank, c.feature_std, seed);
    case ModelKind::biased_mf:
      return BiasedMfModel::create(n_rows, n_cols, c.rank, c.feature_std,
                                   global_mean, seed);
    case ModelKind::ntn: {
      auto m = NtnModel::create(n_rows, n_cols, c.rank, c.ntn_hidden,
                                c.feature_std, seed);
      if (c.ntn_output_sigmoid) {
        if (!(c.ntn_output_max > c.ntn_output_min)) {
          throw Error(ErrorCode::invalid_argument,
                      "NTN output range must satisfy max > min");
        }
        m->params().output_sigmoid = true;
        m->params().output_offset = c.ntn_output_min;
        m->params().output_scale = c.ntn_output_max - c.ntn_output_min;
      }
      return m;
    }
  }
  throw Error(ErrorCode::unsupported, "unknown model kind");
}

std::unique_ptr<Model> model_from_shape(ModelKind kind,
                                        std::span<const std::uint64_t> shape) {
  switch (kind) {
    case ModelKind::nnmf:
      return NnmfModel::from_shape(shape);
    case ModelKind::pmf: {
      expect_length(shape, 3, kind);
      return std::make_unique<PmfModel>(PmfState{
          RowMatrix::Zero(idx(shape[0]), idx(shape[2])),
          RowMatrix::Zero(idx(shape[1]), idx(shape[2]))});
    }
    case ModelKind::biased_mf: {
      expect_length(shape, 3, kind);
      return std::make_unique<BiasedMfModel>(BiasedMfState{
          {RowMatrix::Zero(idx(shape[0]), idx(shape[2])),
           RowMatrix::Zero(idx(shape[1]), idx(shape[2]))},
          Vector::Zero(idx(shape[0])),
          Vector::Zero(idx(shape[1])),
          0.0});
    }
    case ModelKind::ntn: {
      expect_length(shape, 7, kind);
      const Index d = idx(shape[2]);
      const Index h = idx(shape[3]);
      NtnParams p;
      p.u = RowMatrix::Zero(idx(shape[0]), d);
      p.v = RowMatrix::Zero(idx(shape[1]), d);
      p.q = Matrix::Zero(d, d * h);
      p.w = Matrix::Zero(h, 2 * d);
      p.b = Vector::Zero(h);
      p.a = Vector::Zero(h);
      p.output_sigmoid = shape[4] != 0;
      p.output_offset = std::bit_cast<double>(shape[5]);
      p.output_scale = std::bit_cast<double>(shape[6]);
      return std::make_unique<NtnModel>(std::move(p));
    }
  }
  throw Error(ErrorCode::unsupported, "unknown model kind");
}

}  // namespace nnmf
