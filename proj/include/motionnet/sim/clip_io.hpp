#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "motionnet/sim/clip.hpp"

namespace motionnet::sim {

// "MNCLIP01", little-endian.
//   u32 frame count F, u32 actor count A, f32 dt (future label step)
//   per frame: f64 timestamp (relative to the keyframe), 16 x f32 row-major ego pose (ego -> global),
//              u32 point count P, P x (3 x f32) xyz
//   per actor: u32 id, u8 category, 3 x f32 box size (l, w, h), F x (4 x f32) (cx, cy, cz, yaw)
// The keyframe is the frame with timestamp 0; later frames carry annotations only (P = 0).
std::vector<std::uint8_t> encode_clip(const Clip& clip);
Clip decode_clip(std::span<const std::uint8_t> bytes);

void save_clip(const std::filesystem::path& path, const Clip& clip);
Clip load_clip(const std::filesystem::path& path);

}  // namespace motionnet::sim
