#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "motionnet/bev/grid.hpp"
#include "motionnet/nn/tensor.hpp"
#include "motionnet/sim/clip.hpp"

namespace motionnet::bev {

enum class SyncMode { gt, none };
SyncMode parse_sync_mode(std::string_view text);
std::string_view to_string(SyncMode mode);

/// Binary occupancy, C_z x H x W, row-major.
using Occupancy = std::vector<std::uint8_t>;

/// T binary maps in the keyframe coordinate system; the keyframe is last.
struct BEVSequence {
  GridSpec grid;
  std::vector<Occupancy> maps;
  std::vector<double> timestamps;

  std::size_t frames() const { return maps.size(); }
  /// H x W mask of columns with at least one occupied voxel in the keyframe map.
  std::vector<std::uint8_t> keyframe_nonempty() const;
};

/// Input frames re-expressed in keyframe coordinates (gt) or passed through (none).
/// Throws std::invalid_argument on a pose whose rotation is not orthonormal within 1e-6.
std::vector<sim::PointCloud> compensate_ego(const sim::Clip& clip, SyncMode mode);

Occupancy voxelize(std::span<const geometry::Vec3> points, const GridSpec& grid);

std::vector<std::uint8_t> nonempty_columns(const Occupancy& map, const GridSpec& grid);

BEVSequence build_input(const sim::Clip& clip, const GridSpec& grid, SyncMode mode);

/// Stacks sequences into a [B,T,C_z,H,W] tensor of 0/1 values.
nn::Tensor to_tensor(std::span<const BEVSequence* const> batch);

}  // namespace motionnet::bev
