#include "motionnet/nn/checkpoint.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "motionnet/nn/binary_io.hpp"

namespace motionnet::nn {

namespace {
constexpr std::string_view kMagic = "MNCKPT01";
}

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> entries) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw std::invalid_argument("checkpoint: parameter name too long: " + e.name);
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name);
    const auto& shape = e.tensor.shape();
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : e.tensor.data()) w.f64(v);
  }
  io::append_checksum(w);
  return std::move(w.buffer());
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto payload = io::verify_checksum(bytes, "checkpoint");
  io::ByteReader r(payload);
  r.expect_magic(kMagic, "checkpoint");
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16();
    std::string name = r.string(len);
    const std::size_t rank_offset = r.offset();
    const std::uint8_t rank = r.u8();
    if (rank == 0) throw io::FormatError("checkpoint: zero-rank tensor " + name, rank_offset);
    Shape shape;
    for (std::uint8_t d = 0; d < rank; ++d) {
      const std::size_t at = r.offset();
      const std::uint32_t dim = r.u32();
      if (dim == 0) throw io::FormatError("checkpoint: zero dimension in " + name, at);
      shape.push_back(dim);
    }
    const std::size_t n = shape_numel(shape);
    r.require(n * 8, "tensor data of " + name);
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64();
    out.push_back({std::move(name), Tensor::from_data(std::move(shape), std::move(data))});
  }
  if (r.remaining() != 0) throw io::FormatError("checkpoint: trailing bytes after last entry", r.offset());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> entries) {
  io::write_file(path, encode_checkpoint(entries));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

void restore_into(std::span<const NamedTensor> source, std::span<NamedTensor> targets) {
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& s : source) by_name[s.name] = &s;
  for (auto& t : targets) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint is missing " + t.name);
    const auto& src = it->second->tensor;
    if (src.shape() != t.tensor.shape())
      throw std::runtime_error("checkpoint shape mismatch for " + t.name + ": " + shape_string(src.shape()) +
                               " vs " + shape_string(t.tensor.shape()));
    std::ranges::copy(src.data(), t.tensor.mutable_data().begin());
  }
}

}  // namespace motionnet::nn
