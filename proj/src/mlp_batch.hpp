#pragma once

#include <cstddef>
#include <vector>

#include "nnmf/data.hpp"
#include "nnmf/latent_model.hpp"

namespace nnmf::detail {

// Observations are pushed through the network a block of columns at a time.
inline constexpr std::size_t kChunk = 1024;

// Input matrix (input_width x count) for triples [begin, begin + count).
Matrix build_input_chunk(const LatentState& state, const ObservationSet& obs,
                         std::size_t begin, std::size_t count);

// activations[0] is the input; activations[l + 1] the output of layer l.
void forward_chunk(const MlpNetwork& net, const Matrix& input,
                   std::vector<Matrix>& activations);

}  // namespace nnmf::detail
