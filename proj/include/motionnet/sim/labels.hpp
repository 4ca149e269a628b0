#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "motionnet/bev/grid.hpp"
#include "motionnet/sim/clip.hpp"
#include "motionnet/sim/scenario.hpp"

namespace motionnet::sim {

enum class MotionState : std::uint8_t { moving = 0, stationary = 1 };

/// Horizon-average speed below which a cell is labelled static (m/s).
inline constexpr double kStaticSpeed = 0.2;

/// Per-cell ground truth on an H x W lattice, row-major (row = x index, col = y index).
struct LabelGrids {
  std::size_t rows = 0, cols = 0, steps = 0;
  double step_seconds = 0.0;
  std::vector<std::uint8_t> category;  // Category values
  std::vector<std::int32_t> instance;  // actor id, 0 = background
  std::vector<double> motion;          // [steps][rows][cols][2], metres from the keyframe
  std::vector<std::uint8_t> state;     // MotionState values
  std::vector<std::uint8_t> nonempty;  // 1 where the keyframe map has any occupied voxel

  std::size_t cells() const { return rows * cols; }
  double motion_at(std::size_t step, std::size_t cell, int component) const {
    return motion[(step * cells() + cell) * 2 + component];
  }
  /// Increment between consecutive horizons: d(n) - d(n-1), with d(-1) = 0.
  std::vector<double> relative_motion() const;
};

/// One actor's box in the keyframe ego frame: at the keyframe and at each future step.
struct BoxTrack {
  int id = 0;
  Category category = Category::vehicle;
  BoxSize size;
  BoxPose current;
  std::vector<BoxPose> future;
};

/// Core labelling. A non-empty cell whose centre lies inside a box takes that box's category and id
/// (nearest box centre wins on overlap) and motion[n] = R_n (x - c) + c + dc_n - x, where R_n is the
/// box's yaw change and dc_n its centre displacement up to step n. Everything else is background
/// with zero motion. An empty `nonempty` span treats every cell as non-empty.
LabelGrids derive_cell_gt(std::span<const BoxTrack> tracks, std::size_t steps, double step_seconds,
                          const bev::GridSpec& grid, std::span<const std::uint8_t> nonempty,
                          double static_speed = kStaticSpeed);

/// Labels for a clip's keyframe from its stored future box poses.
LabelGrids derive_cell_gt(const Clip& clip, const bev::GridSpec& grid, std::span<const std::uint8_t> nonempty,
                          double static_speed = kStaticSpeed);

/// Labels straight from the scenario's trajectories at time t.
LabelGrids derive_cell_gt(const Scenario& scenario, double t, std::size_t steps, double step_seconds,
                          const bev::GridSpec& grid, std::span<const std::uint8_t> nonempty = {},
                          double static_speed = kStaticSpeed);

/// Box tracks of a clip expressed in its keyframe ego frame.
std::vector<BoxTrack> clip_tracks(const Clip& clip);

/// Box pose re-expressed through a rigid transform (yaw follows the projected heading).
BoxPose transform_box(const geometry::Mat4& transform, const BoxPose& pose);

}  // namespace motionnet::sim
