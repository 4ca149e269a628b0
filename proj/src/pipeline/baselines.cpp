#include "motionnet/pipeline/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace motionnet::pipeline {

namespace {

InferenceOutput empty_like(const sim::LabelGrids& labels) {
  InferenceOutput out;
  out.rows = labels.rows;
  out.cols = labels.cols;
  out.steps = labels.steps;
  out.categories = sim::kNumCategories;
  out.category = labels.category;
  out.static_prob.assign(labels.cells(), 0.0);
  out.displacement.assign(labels.steps * labels.cells() * 2, 0.0);
  return out;
}

}  // namespace

InferenceOutput baseline_static(const sim::LabelGrids& labels) { return empty_like(labels); }

InferenceOutput baseline_const_velocity(const sim::LabelGrids& labels, std::span<const double> flow,
                                        double interval) {
  if (flow.size() != labels.cells() * 2) throw std::invalid_argument("baseline_const_velocity: flow grid mismatch");
  if (!(interval > 0)) throw std::invalid_argument("baseline_const_velocity: interval must be positive");
  InferenceOutput out = empty_like(labels);
  const std::size_t cells = labels.cells();
  for (std::size_t n = 0; n < labels.steps; ++n) {
    const double f = static_cast<double>(n + 1) * labels.step_seconds / interval;
    for (std::size_t i = 0; i < cells * 2; ++i) out.displacement[n * cells * 2 + i] = f * flow[i];
  }
  return out;
}

std::vector<double> last_interval_flow(const sim::Clip& clip, const sim::LabelGrids& labels,
                                       const bev::GridSpec& grid, double* interval) {
  const std::size_t cur = clip.current_index();
  if (cur == 0) throw std::invalid_argument("last_interval_flow: clip has a single input frame");
  if (interval) *interval = clip.frames[cur].timestamp - clip.frames[cur - 1].timestamp;
  const geometry::Mat4 world_to_ego = geometry::rigid_inverse(clip.frames[cur].ego_pose);
  std::vector<double> flow(labels.cells() * 2, 0.0);
  for (const auto& a : clip.actors) {
    const sim::BoxPose now = sim::transform_box(world_to_ego, a.poses.at(cur));
    const sim::BoxPose before = sim::transform_box(world_to_ego, a.poses.at(cur - 1));
    const double dyaw = before.yaw - now.yaw;
    const double cs = std::cos(dyaw), sn = std::sin(dyaw);
    for (std::size_t r = 0; r < labels.rows; ++r)
      for (std::size_t c = 0; c < labels.cols; ++c) {
        const std::size_t cell = r * labels.cols + c;
        if (labels.instance[cell] != a.id) continue;
        const double x = grid.cell_center_x(r), y = grid.cell_center_y(c);
        const double rx = x - now.x, ry = y - now.y;
        // Where this body point sat one frame earlier.
        const double px = cs * rx - sn * ry + before.x, py = sn * rx + cs * ry + before.y;
        flow[cell * 2] = x - px;
        flow[cell * 2 + 1] = y - py;
      }
  }
  return flow;
}

}  // namespace motionnet::pipeline
