#include "motionnet/sim/lidar.hpp"

#include <cmath>
#include <random>

namespace motionnet::sim {

namespace {

using geometry::Vec3;

class Sampler {
 public:
  Sampler(const LidarConfig& config, std::uint64_t seed) : config_(config), rng_(seed) {}

  // Sides and top of a box whose pose is already in the sensor frame.
  void box(const BoxPose& pose, const BoxSize& size, PointCloud& out) {
    const double l = size.length, w = size.width, h = size.height;
    struct Face {
      Vec3 origin, u, v;  // origin + a*u + b*v, a,b in [0,1]; box-local coordinates
    };
    const Face faces[5] = {
        {{l / 2, -w / 2, -h / 2}, {0, w, 0}, {0, 0, h}},    // front
        {{-l / 2, -w / 2, -h / 2}, {0, w, 0}, {0, 0, h}},   // rear
        {{-l / 2, w / 2, -h / 2}, {l, 0, 0}, {0, 0, h}},    // left
        {{-l / 2, -w / 2, -h / 2}, {l, 0, 0}, {0, 0, h}},   // right
        {{-l / 2, -w / 2, h / 2}, {l, 0, 0}, {0, w, 0}},    // top
    };
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const Face& f : faces) {
      const double area = f.u.norm() * f.v.norm();
      const int n = std::poisson_distribution<int>(config_.surface_density * area)(rng_);
      for (int k = 0; k < n; ++k) {
        const Vec3 local = f.origin + unit(rng_) * f.u + unit(rng_) * f.v;
        Vec3 p(pose.x + c * local.x() - s * local.y(), pose.y + s * local.x() + c * local.y(), pose.z + local.z());
        keep(p, out);
      }
    }
  }

  void ground(double ground_z, const std::vector<std::pair<BoxPose, BoxSize>>& footprints, PointCloud& out) {
    const double e = config_.ground_extent;
    const int n = std::poisson_distribution<int>(config_.ground_density * 4.0 * e * e)(rng_);
    std::uniform_real_distribution<double> coord(-e, e);
    for (int k = 0; k < n; ++k) {
      Vec3 p(coord(rng_), coord(rng_), ground_z);
      bool covered = false;
      for (const auto& [pose, size] : footprints)
        if (point_in_box(p.x(), p.y(), pose, size)) {
          covered = true;
          break;
        }
      if (!covered) keep(p, out);
    }
  }

 private:
  void keep(Vec3 p, PointCloud& out) {
    const double range = p.norm();
    if (range > config_.max_range) return;
    const double ratio = range / config_.range_scale;
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) >= 1.0 / (1.0 + ratio * ratio)) return;
    if (config_.noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, config_.noise_sigma);
      p += Vec3(noise(rng_), noise(rng_), noise(rng_));
    }
    out.push_back(p);
  }

  const LidarConfig& config_;
  std::mt19937_64 rng_;
};

BoxPose to_sensor(const BoxPose& global, const geometry::Mat4& world_to_sensor) {
  const Vec3 c = geometry::apply(world_to_sensor, Vec3(global.x, global.y, global.z));
  const double yaw = global.yaw + geometry::yaw_of(world_to_sensor);
  return {c.x(), c.y(), c.z(), yaw};
}

}  // namespace

PointCloud sample_box_surface(const BoxPose& pose_in_sensor, const BoxSize& size, const LidarConfig& config,
                              std::uint64_t seed) {
  Sampler sampler(config, seed);
  PointCloud out;
  sampler.box(pose_in_sensor, size, out);
  return out;
}

PointCloud sample_lidar(const Scenario& scenario, double t, const LidarConfig& config, std::uint64_t seed) {
  const geometry::Mat4 world_to_sensor = geometry::rigid_inverse(scenario.ego_pose(t));
  Sampler sampler(config, seed);
  PointCloud out;
  std::vector<std::pair<BoxPose, BoxSize>> footprints;
  for (const auto& actor : scenario.actors) {
    const BoxPose p = to_sensor(actor.trajectory.pose_at(t), world_to_sensor);
    footprints.emplace_back(p, actor.size);
    sampler.box(p, actor.size, out);
  }
  if (config.clutter)
    for (const auto& s : scenario.clutter) {
      const BoxPose p = to_sensor(s.pose, world_to_sensor);
      footprints.emplace_back(p, s.size);
      sampler.box(p, s.size, out);
    }
  if (config.ground) sampler.ground(scenario.ground_z, footprints, out);
  return out;
}

}  // namespace motionnet::sim
