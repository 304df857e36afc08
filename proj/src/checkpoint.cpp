#include "nnmf/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "nnmf/error.hpp"
#include "nnmf/factory.hpp"

namespace nnmf {

namespace {

constexpr std::array<char, 5> kMagic{'N', 'N', 'M', 'F', '\x01'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  void le(std::uint64_t v, int n) {
    std::array<char, 8> buf{};
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf.data(), n);
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) truncated();
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  [[noreturn]] static void truncated() {
    throw Error(ErrorCode::truncated, "checkpoint file is truncated");
  }
  std::uint64_t le(int n) {
    std::array<unsigned char, 8> buf{};
    in_.read(reinterpret_cast<char*>(buf.data()), n);
    if (in_.gcount() != n) truncated();
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

void write_block(Writer& w, const ConstParamSpans& spans) {
  w.u32(static_cast<std::uint32_t>(spans.size()));
  for (auto s : spans) {
    w.u64(s.size());
    for (double x : s) w.f64(x);
  }
}

void read_block(Reader& r, const ParamSpans& spans, const char* name) {
  const auto count = r.u32();
  if (count != spans.size()) {
    throw Error(ErrorCode::format, std::string("checkpoint ") + name +
                                       " block has an unexpected tensor count");
  }
  for (auto s : spans) {
    if (r.u64() != s.size()) {
      throw Error(ErrorCode::format, std::string("checkpoint ") + name +
                                         " tensor length disagrees with its shape");
    }
    for (double& x : s) x = r.f64();
  }
}

std::string describe(const std::vector<std::uint64_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& config_text,
                     std::ostream& out) {
  Writer w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.kind()));
  const auto shape = model.shape();
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (auto s : shape) w.u64(s);
  w.u32(static_cast<std::uint32_t>(config_text.size()));
  w.bytes(config_text.data(), config_text.size());
  write_block(w, model.parameters(Block::network));
  write_block(w, model.parameters(Block::features));
  if (!out) throw Error(ErrorCode::io, "checkpoint write failed");
}

void save_checkpoint(const Model& model, const std::string& config_text,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  save_checkpoint(model, config_text, out);
}

LoadedCheckpoint load_checkpoint(std::istream& in,
                                 const CheckpointExpectation& expect) {
  Reader r(in);
  std::array<char, 5> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::format, "not an NNMF checkpoint (bad magic header)");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::version,
                "checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto kind_raw = r.u32();
  if (kind_raw < 1 || kind_raw > 4) {
    throw Error(ErrorCode::format, "unknown model kind " + std::to_string(kind_raw));
  }
  const auto kind = static_cast<ModelKind>(kind_raw);
  const auto n_shape = r.u32();
  if (n_shape > 4096) throw Error(ErrorCode::format, "implausible shape descriptor");
  std::vector<std::uint64_t> shape(n_shape);
  for (auto& s : shape) s = r.u64();

  if (expect.kind && *expect.kind != kind) {
    throw Error(ErrorCode::shape, "checkpoint holds a " + std::string(to_string(kind)) +
                                      " model, expected " +
                                      std::string(to_string(*expect.kind)));
  }
  if (expect.shape && *expect.shape != shape) {
    throw Error(ErrorCode::shape, "checkpoint shape " + describe(shape) +
                                      " does not match expected " +
                                      describe(*expect.shape));
  }

  const auto config_len = r.u32();
  std::string config(config_len, '\0');
  r.bytes(config.data(), config.size());

  auto model = model_from_shape(kind, shape);
  read_block(r, model->parameters(Block::network), "network");
  read_block(r, model->parameters(Block::features), "feature");
  if (!r.at_end()) throw Error(ErrorCode::format, "trailing bytes after checkpoint");
  return {std::move(model), std::move(config)};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const CheckpointExpectation& expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return load_checkpoint(in, expect);
}

void checkpoint_save(const MlpNetwork& net, const LatentState& state,
                     const std::filesystem::path& path) {
  save_checkpoint(NnmfModel(net, state), "", path);
}

std::pair<MlpNetwork, LatentState> checkpoint_load(
    const std::filesystem::path& path, const std::optional<LatentDims>& expected) {
  auto loaded = load_checkpoint(path, {ModelKind::nnmf, std::nullopt});
  auto& model = static_cast<NnmfModel&>(*loaded.model);
  if (expected && model.state().dims() != *expected) {
    const auto got = model.state().dims();
    throw Error(ErrorCode::shape,
                "checkpoint dims (N=" + std::to_string(got.n_rows) +
                    ", M=" + std::to_string(got.n_cols) + ", D=" + std::to_string(got.d) +
                    ", D'=" + std::to_string(got.d_prime) + ", K=" + std::to_string(got.k) +
                    ") do not match expected (N=" + std::to_string(expected->n_rows) +
                    ", M=" + std::to_string(expected->n_cols) +
                    ", D=" + std::to_string(expected->d) +
                    ", D'=" + std::to_string(expected->d_prime) +
                    ", K=" + std::to_string(expected->k) + ")");
  }
  return {std::move(model.network()), std::move(model.state())};
}

}  // namespace nnmf
