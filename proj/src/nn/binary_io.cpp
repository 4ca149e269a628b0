#include "motionnet/nn/binary_io.hpp"

#include <bit>
#include <fstream>

namespace motionnet::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ByteReader::require(std::size_t count, std::string_view what) const {
  if (remaining() < count)
    throw FormatError("truncated input while reading " + std::string(what), offset_);
}

void ByteReader::expect_magic(std::string_view magic, std::string_view what) {
  require(magic.size(), std::string(what) + " magic");
  if (std::memcmp(data_.data() + offset_, magic.data(), magic.size()) != 0)
    throw FormatError("bad magic: not a " + std::string(what) + " file (expected \"" + std::string(magic) + "\")",
                      offset_);
  offset_ += magic.size();
}

std::string ByteReader::string(std::size_t length) {
  require(length, "string");
  std::string s(reinterpret_cast<const char*>(data_.data() + offset_), length);
  offset_ += length;
  return s;
}

void append_checksum(ByteWriter& writer) { writer.u64(fnv1a64(writer.buffer())); }

std::span<const std::uint8_t> verify_checksum(std::span<const std::uint8_t> data, std::string_view what) {
  if (data.size() < 8) throw FormatError(std::string(what) + " too short to hold a checksum", 0);
  const auto payload = data.first(data.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + payload.size(), 8);
  if (stored != fnv1a64(payload)) throw FormatError(std::string(what) + " checksum mismatch", payload.size());
  return payload;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace motionnet::io
