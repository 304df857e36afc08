#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nnmf/latent_model.hpp"
#include "nnmf/model.hpp"

namespace nnmf {

// Binary checkpoint layout, all integers and doubles little-endian:
//
//   magic        5 bytes  "NNMF" 0x01
//   version      u32      kCheckpointVersion
//   model kind   u32      ModelKind
//   shape        u32 count, then count x u64
//   config       u32 length, then that many bytes of key = value text
//   network      u32 tensor count, each: u64 length, then length x f64
//   features     u32 tensor count, each: u64 length, then length x f64
//
// For NNMF the shape is (N, M, D, D', K, L, layer_dims[0..L)).
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointExpectation {
  std::optional<ModelKind> kind;
  std::optional<std::vector<std::uint64_t>> shape;
};

void save_checkpoint(const Model& model, const std::string& config_text,
                     std::ostream& out);
void save_checkpoint(const Model& model, const std::string& config_text,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::string config_text;
};

// Error codes: format (magic or layout), version, truncated, shape
// (mismatch against `expect`).
LoadedCheckpoint load_checkpoint(std::istream& in,
                                 const CheckpointExpectation& expect = {});
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const CheckpointExpectation& expect = {});

// NNMF convenience pair.
void checkpoint_save(const MlpNetwork& net, const LatentState& state,
                     const std::filesystem::path& path);
std::pair<MlpNetwork, LatentState> checkpoint_load(
    const std::filesystem::path& path,
    const std::optional<LatentDims>& expected = std::nullopt);

}  // namespace nnmf
