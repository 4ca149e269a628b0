#pragma once

#include <cstdint>
#include <vector>

#include "motionnet/geometry.hpp"
#include "motionnet/sim/lidar.hpp"
#include "motionnet/sim/scenario.hpp"

namespace motionnet::sim {

struct Frame {
  double timestamp = 0.0;  // seconds relative to the keyframe
  geometry::Mat4 ego_pose = geometry::Mat4::Identity();  // ego -> global
  PointCloud points;  // local ego coordinates; empty for annotation-only future frames
};

/// One actor's global box poses, one per clip frame.
struct ActorRecord {
  int id = 0;
  Category category = Category::vehicle;
  BoxSize size;
  std::vector<BoxPose> poses;
};

/// Input sweeps (keyframe last among them) followed by annotation-only future frames.
/// The keyframe is the frame with timestamp exactly 0; future frames are spaced by future_step.
struct Clip {
  std::vector<Frame> frames;
  std::vector<ActorRecord> actors;
  double future_step = 0.25;

  std::size_t current_index() const;
  std::size_t input_frame_count() const { return current_index() + 1; }
  std::size_t future_frame_count() const { return frames.size() - input_frame_count(); }
};

struct ClipSpec {
  int input_frames = 5;
  double frame_spacing = 0.2;
  int future_steps = 4;
  double future_step = 0.25;
};

/// Samples the clip whose keyframe is at scenario time t. All stored values are rounded to
/// single precision so that the in-memory clip equals its serialised form.
Clip make_clip(const Scenario& scenario, double t, const ClipSpec& spec, const LidarConfig& lidar,
               std::uint64_t seed);

struct ClipPair {
  Clip current;
  Clip shifted;                   // keyframe at t + offset
  geometry::Mat4 relative_ego;    // pose(t + offset)^-1 * pose(t): current-frame -> shifted-frame coordinates
};

ClipPair make_clip_pair(const Scenario& scenario, double t, const ClipSpec& spec, const LidarConfig& lidar,
                        std::uint64_t seed, double offset = 0.05);

/// Relative transform between two clips' keyframes (current-frame -> other-frame coordinates).
geometry::Mat4 relative_ego_transform(const Clip& current, const Clip& other);

}  // namespace motionnet::sim
