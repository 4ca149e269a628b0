#include "motionnet/sim/clip.hpp"

#include <stdexcept>

namespace motionnet::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

geometry::Mat4 quantize(const geometry::Mat4& m) {
  geometry::Mat4 q;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) q(i, j) = f32(m(i, j));
  return q;
}

BoxPose quantize(const BoxPose& p) { return {f32(p.x), f32(p.y), f32(p.z), f32(p.yaw)}; }

}  // namespace

std::size_t Clip::current_index() const {
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].timestamp == 0.0) return i;
  throw std::logic_error("clip has no keyframe (no frame with timestamp 0)");
}

Clip make_clip(const Scenario& scenario, double t, const ClipSpec& spec, const LidarConfig& lidar,
               std::uint64_t seed) {
  if (spec.input_frames < 1 || spec.future_steps < 0 || spec.frame_spacing <= 0.0 || spec.future_step <= 0.0)
    throw std::invalid_argument("make_clip: invalid clip spec");
  Clip clip;
  clip.future_step = f32(spec.future_step);

  std::vector<double> offsets;
  for (int i = 0; i < spec.input_frames; ++i) offsets.push_back((i - (spec.input_frames - 1)) * spec.frame_spacing);
  for (int n = 1; n <= spec.future_steps; ++n) offsets.push_back(n * clip.future_step);

  for (std::size_t i = 0; i < offsets.size(); ++i) {
    Frame frame;
    frame.timestamp = offsets[i];
    frame.ego_pose = quantize(scenario.ego_pose(t + offsets[i]));
    if (offsets[i] <= 0.0) {
      frame.points = sample_lidar(scenario, t + offsets[i], lidar, splitmix64(seed ^ splitmix64(i + 1)));
      for (auto& p : frame.points) p = geometry::Vec3(f32(p.x()), f32(p.y()), f32(p.z()));
    }
    clip.frames.push_back(std::move(frame));
  }

  for (const auto& actor : scenario.actors) {
    ActorRecord rec;
    rec.id = actor.id;
    rec.category = actor.category;
    rec.size = {f32(actor.size.length), f32(actor.size.width), f32(actor.size.height)};
    for (double off : offsets) rec.poses.push_back(quantize(actor.trajectory.pose_at(t + off)));
    clip.actors.push_back(std::move(rec));
  }
  return clip;
}

geometry::Mat4 relative_ego_transform(const Clip& current, const Clip& other) {
  return geometry::rigid_inverse(other.frames[other.current_index()].ego_pose) *
         current.frames[current.current_index()].ego_pose;
}

ClipPair make_clip_pair(const Scenario& scenario, double t, const ClipSpec& spec, const LidarConfig& lidar,
                        std::uint64_t seed, double offset) {
  ClipPair pair;
  pair.current = make_clip(scenario, t, spec, lidar, seed);
  pair.shifted = make_clip(scenario, t + offset, spec, lidar, splitmix64(seed + 0x5bd1e995ULL));
  pair.relative_ego = relative_ego_transform(pair.current, pair.shifted);
  return pair;
}

}  // namespace motionnet::sim
