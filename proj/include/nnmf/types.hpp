#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nnmf {

using Index = std::int64_t;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Per-entity features are stored one entity per row so a row is contiguous.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ParamSpans = std::vector<std::span<double>>;
using ConstParamSpans = std::vector<std::span<const double>>;

template <typename Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Derived>
std::span<const double> as_span(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

inline ConstParamSpans const_spans(const ParamSpans& spans) {
  return {spans.begin(), spans.end()};
}

inline std::size_t total_size(const ConstParamSpans& spans) {
  std::size_t n = 0;
  for (auto s : spans) n += s.size();
  return n;
}

inline std::size_t total_size(const ParamSpans& spans) {
  std::size_t n = 0;
  for (auto s : spans) n += s.size();
  return n;
}

}  // namespace nnmf
