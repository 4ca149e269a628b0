#include "motionnet/sim/labels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace motionnet::sim {

std::vector<double> LabelGrids::relative_motion() const {
  std::vector<double> rel(motion.size());
  const std::size_t plane = cells() * 2;
  for (std::size_t n = 0; n < steps; ++n)
    for (std::size_t i = 0; i < plane; ++i)
      rel[n * plane + i] = motion[n * plane + i] - (n > 0 ? motion[(n - 1) * plane + i] : 0.0);
  return rel;
}

BoxPose transform_box(const geometry::Mat4& transform, const BoxPose& pose) {
  const geometry::Vec3 c = geometry::apply(transform, geometry::Vec3(pose.x, pose.y, pose.z));
  const geometry::Vec3 heading =
      transform.topLeftCorner<3, 3>() * geometry::Vec3(std::cos(pose.yaw), std::sin(pose.yaw), 0.0);
  return {c.x(), c.y(), c.z(), std::atan2(heading.y(), heading.x())};
}

LabelGrids derive_cell_gt(std::span<const BoxTrack> tracks, std::size_t steps, double step_seconds,
                          const bev::GridSpec& grid, std::span<const std::uint8_t> nonempty, double static_speed) {
  grid.validate();
  LabelGrids out;
  out.rows = grid.rows();
  out.cols = grid.cols();
  out.steps = steps;
  out.step_seconds = step_seconds;
  const std::size_t cells = out.cells();
  if (!nonempty.empty() && nonempty.size() != cells)
    throw std::invalid_argument("derive_cell_gt: non-empty mask has " + std::to_string(nonempty.size()) +
                                " cells, grid has " + std::to_string(cells));
  for (const auto& tr : tracks)
    if (tr.future.size() < steps)
      throw std::invalid_argument("derive_cell_gt: actor " + std::to_string(tr.id) + " has " +
                                  std::to_string(tr.future.size()) + " future poses, " + std::to_string(steps) +
                                  " needed");

  out.category.assign(cells, static_cast<std::uint8_t>(Category::background));
  out.instance.assign(cells, 0);
  out.motion.assign(steps * cells * 2, 0.0);
  out.state.assign(cells, static_cast<std::uint8_t>(MotionState::stationary));
  out.nonempty.assign(cells, 1);
  if (!nonempty.empty()) out.nonempty.assign(nonempty.begin(), nonempty.end());

  const double horizon = static_cast<double>(steps) * step_seconds;
  for (std::size_t r = 0; r < out.rows; ++r) {
    const double x = grid.cell_center_x(r);
    for (std::size_t c = 0; c < out.cols; ++c) {
      const std::size_t cell = r * out.cols + c;
      if (!out.nonempty[cell]) continue;
      const double y = grid.cell_center_y(c);
      const BoxTrack* owner = nullptr;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& tr : tracks) {
        if (!point_in_box(x, y, tr.current, tr.size)) continue;
        const double d = std::hypot(x - tr.current.x, y - tr.current.y);
        if (d < best) {
          best = d;
          owner = &tr;
        }
      }
      if (!owner) continue;
      out.category[cell] = static_cast<std::uint8_t>(owner->category);
      out.instance[cell] = owner->id;
      const double rx = x - owner->current.x, ry = y - owner->current.y;
      for (std::size_t n = 0; n < steps; ++n) {
        const BoxPose& f = owner->future[n];
        const double dyaw = f.yaw - owner->current.yaw;
        const double cs = std::cos(dyaw), sn = std::sin(dyaw);
        // R (x - c) + c + dc - x, with c + dc the future centre.
        out.motion[(n * cells + cell) * 2 + 0] = cs * rx - sn * ry + f.x - x;
        out.motion[(n * cells + cell) * 2 + 1] = sn * rx + cs * ry + f.y - y;
      }
      if (steps > 0) {
        const double mx = out.motion_at(steps - 1, cell, 0), my = out.motion_at(steps - 1, cell, 1);
        out.state[cell] = static_cast<std::uint8_t>(std::hypot(mx, my) / horizon < static_speed
                                                        ? MotionState::stationary
                                                        : MotionState::moving);
      }
    }
  }
  return out;
}

std::vector<BoxTrack> clip_tracks(const Clip& clip) {
  const std::size_t cur = clip.current_index();
  const geometry::Mat4 world_to_ego = geometry::rigid_inverse(clip.frames[cur].ego_pose);
  std::vector<BoxTrack> tracks;
  for (const auto& a : clip.actors) {
    if (a.poses.size() != clip.frames.size())
      throw std::invalid_argument("clip actor " + std::to_string(a.id) + " has " + std::to_string(a.poses.size()) +
                                  " poses for " + std::to_string(clip.frames.size()) + " frames");
    BoxTrack tr;
    tr.id = a.id;
    tr.category = a.category;
    tr.size = a.size;
    tr.current = transform_box(world_to_ego, a.poses[cur]);
    for (std::size_t i = cur + 1; i < a.poses.size(); ++i) tr.future.push_back(transform_box(world_to_ego, a.poses[i]));
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

LabelGrids derive_cell_gt(const Clip& clip, const bev::GridSpec& grid, std::span<const std::uint8_t> nonempty,
                          double static_speed) {
  const auto tracks = clip_tracks(clip);
  return derive_cell_gt(tracks, clip.future_frame_count(), clip.future_step, grid, nonempty, static_speed);
}

LabelGrids derive_cell_gt(const Scenario& scenario, double t, std::size_t steps, double step_seconds,
                          const bev::GridSpec& grid, std::span<const std::uint8_t> nonempty, double static_speed) {
  const geometry::Mat4 world_to_ego = geometry::rigid_inverse(scenario.ego_pose(t));
  std::vector<BoxTrack> tracks;
  for (const auto& a : scenario.actors) {
    BoxTrack tr;
    tr.id = a.id;
    tr.category = a.category;
    tr.size = a.size;
    tr.current = transform_box(world_to_ego, a.trajectory.pose_at(t));
    for (std::size_t n = 1; n <= steps; ++n)
      tr.future.push_back(transform_box(world_to_ego, a.trajectory.pose_at(t + static_cast<double>(n) * step_seconds)));
    tracks.push_back(std::move(tr));
  }
  return derive_cell_gt(tracks, steps, step_seconds, grid, nonempty, static_speed);
}

}  // namespace motionnet::sim
