#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motionnet/nn/tensor.hpp"

namespace motionnet::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Layout ("MNCKPT01", little-endian):
//   u32 count; per entry: u16 name length, UTF-8 name, u8 rank, u32 dims[rank], f64 data[]
//   u64 FNV-1a over every preceding byte.
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> entries);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> entries);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies values by name into `targets`. Every target must be present with an identical shape.
void restore_into(std::span<const NamedTensor> source, std::span<NamedTensor> targets);

}  // namespace motionnet::nn
