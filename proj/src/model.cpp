#include "nnmf/model.hpp"

#include <cmath>
#include <string>

#include "nnmf/error.hpp"

namespace nnmf {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::nnmf: return "nnmf";
    case ModelKind::pmf: return "pmf";
    case ModelKind::biased_mf: return "biasedmf";
    case ModelKind::ntn: return "ntn";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::nnmf, ModelKind::pmf, ModelKind::biased_mf,
                 ModelKind::ntn}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::invalid_argument,
              "unknown model kind '" + std::string(text) + "'");
}

std::vector<std::vector<double>> zeros_like(const ConstParamSpans& spans) {
  std::vector<std::vector<double>> out;
  out.reserve(spans.size());
  for (auto s : spans) out.emplace_back(s.size(), 0.0);
  return out;
}

std::vector<double> Model::predict_all(const ObservationSet& obs) const {
  std::vector<double> out;
  out.reserve(obs.size());
  for (const auto& t : obs.triples()) out.push_back(predict(t.row, t.col));
  return out;
}

ConstParamSpans Model::parameters(Block block) const {
  return const_spans(const_cast<Model*>(this)->parameters(block));
}

double Model::objective(const ObservationSet& train, double lambda) const {
  check_fits(train);
  const auto pred = predict_all(train);
  double sse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = train[i].value - pred[i];
    sse += r * r;
  }
  return sse + lambda * feature_penalty(*this);
}

void Model::check_fits(const ObservationSet& obs) const {
  if (obs.n_rows() != n_rows() || obs.n_cols() != n_cols()) {
    throw Error(ErrorCode::shape,
                "model is " + std::to_string(n_rows()) + "x" +
                    std::to_string(n_cols()) + " but data is " +
                    std::to_string(obs.n_rows()) + "x" +
                    std::to_string(obs.n_cols()));
  }
}

void Model::check_index(Index row, Index col) const {
  if (row < 0 || row >= n_rows() || col < 0 || col >= n_cols()) {
    throw Error(ErrorCode::index_range,
                "cell (" + std::to_string(row) + ", " + std::to_string(col) +
                    ") outside " + std::to_string(n_rows()) + "x" +
                    std::to_string(n_cols()));
  }
}

double feature_penalty(const Model& model) {
  double s = 0.0;
  for (auto span : model.parameters(Block::features)) {
    for (double x : span) s += x * x;
  }
  return s;
}

void check_finite(const Gradient& grad, std::string_view model_name) {
  for (auto b : {Block::network, Block::features}) {
    const auto& blocks = grad.block(b);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      for (std::size_t j = 0; j < blocks[i].size(); ++j) {
        if (!std::isfinite(blocks[i][j])) {
          throw Error(ErrorCode::numerical,
                      std::string(model_name) + ": non-finite gradient in " +
                          (b == Block::network ? "network" : "feature") +
                          " tensor " + std::to_string(i) + " at entry " +
                          std::to_string(j));
        }
      }
    }
  }
}

double add_feature_penalty(const Model& model, double lambda, Gradient& grad) {
  const auto feats = model.parameters(Block::features);
  double penalty = 0.0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    auto& g = grad.features[i];
    const auto f = feats[i];
    for (std::size_t j = 0; j < f.size(); ++j) {
      g[j] += 2.0 * lambda * f[j];
      penalty += f[j] * f[j];
    }
  }
  return lambda * penalty;
}

}  // namespace nnmf
