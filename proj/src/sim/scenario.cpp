#include "motionnet/sim/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace motionnet::sim {

std::string_view category_name(Category category) {
  switch (category) {
    case Category::background: return "background";
    case Category::vehicle: return "vehicle";
    case Category::pedestrian: return "pedestrian";
    case Category::bicycle: return "bicycle";
    case Category::others: return "others";
  }
  return "unknown";
}

BoxPose Trajectory::pose_at(double t) const {
  BoxPose p = origin;
  const double c0 = std::cos(origin.yaw), s0 = std::sin(origin.yaw);
  switch (profile) {
    case MotionProfile::stationary: break;
    case MotionProfile::straight:
      p.x += speed * t * c0;
      p.y += speed * t * s0;
      break;
    case MotionProfile::constant_turn:
      if (std::abs(yaw_rate) < 1e-12) {
        p.x += speed * t * c0;
        p.y += speed * t * s0;
      } else {
        const double yaw = origin.yaw + yaw_rate * t;
        const double r = speed / yaw_rate;
        p.x += r * (std::sin(yaw) - s0);
        p.y -= r * (std::cos(yaw) - c0);
        p.yaw = yaw;
      }
      break;
    case MotionProfile::stop_and_go: {
      // speed(t) = v (1 + cos(wt + phase)) >= 0, so the actor halts once per period.
      const double w = 2.0 * std::numbers::pi / stop_period;
      const double s = speed * t + speed / w * (std::sin(w * t + stop_phase) - std::sin(stop_phase));
      p.x += s * c0;
      p.y += s * s0;
      break;
    }
  }
  return p;
}

geometry::Mat4 Scenario::ego_pose(double t) const {
  const BoxPose p = ego.pose_at(t);
  return geometry::planar_pose(p.x, p.y, 0.0, p.yaw);
}

bool point_in_box(double px, double py, const BoxPose& pose, const BoxSize& size) {
  const double dx = px - pose.x, dy = py - pose.y;
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= 0.5 * size.length && std::abs(v) <= 0.5 * size.width;
}

bool boxes_overlap(const BoxPose& a, const BoxSize& sa, const BoxPose& b, const BoxSize& sb, double margin) {
  // Separating axis test over the four edge normals.
  const double axes[4] = {a.yaw, a.yaw + std::numbers::pi / 2, b.yaw, b.yaw + std::numbers::pi / 2};
  const double dx = b.x - a.x, dy = b.y - a.y;
  for (double ang : axes) {
    const double ux = std::cos(ang), uy = std::sin(ang);
    auto radius = [&](const BoxPose& p, const BoxSize& s) {
      const double ca = std::abs(std::cos(p.yaw - ang)), sa_ = std::abs(std::sin(p.yaw - ang));
      return 0.5 * (s.length + margin) * ca + 0.5 * (s.width + margin) * sa_;
    };
    if (std::abs(dx * ux + dy * uy) > radius(a, sa) + radius(b, sb)) return false;
  }
  return true;
}

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uniform_int = [&](int lo, int hi) {
    if (hi <= lo) return lo;
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  Scenario scenario;
  scenario.ground_z = config.ground_z;

  const double ego_speed = uniform(config.ego_speed_min, config.ego_speed_max);
  const double ego_yaw_rate = uniform(-config.ego_yaw_rate_max, config.ego_yaw_rate_max);
  scenario.ego.speed = ego_speed;
  scenario.ego.yaw_rate = ego_yaw_rate;
  scenario.ego.profile = ego_speed <= 0.0             ? MotionProfile::stationary
                         : std::abs(ego_yaw_rate) > 0 ? MotionProfile::constant_turn
                                                      : MotionProfile::straight;

  const BoxPose ego_box{0.0, 0.0, 0.0, 0.0};
  const BoxSize ego_size{4.8, 2.2, 1.8};
  const double r = config.region_half_extent;
  constexpr double kMargin = 0.3;

  int next_id = 1;
  for (int ci = 0; ci < 4; ++ci) {
    const CategorySpec& spec = config.categories[ci];
    const int count = uniform_int(spec.min_count, spec.max_count);
    for (int k = 0; k < count; ++k) {
      RigidActor actor;
      actor.id = next_id++;
      actor.category = static_cast<Category>(ci + 1);
      actor.size = {uniform(spec.size_min.length, spec.size_max.length),
                    uniform(spec.size_min.width, spec.size_max.width),
                    uniform(spec.size_min.height, spec.size_max.height)};
      if (actor.size.width > actor.size.length) std::swap(actor.size.width, actor.size.length);

      const double u = uniform(0.0, 1.0);
      Trajectory& tr = actor.trajectory;
      tr.speed = uniform(spec.speed_min, spec.speed_max);
      if (u < config.stationary_fraction || tr.speed <= 0.0) {
        tr.profile = MotionProfile::stationary;
        tr.speed = 0.0;
      } else if (u < config.stationary_fraction + config.turn_fraction) {
        tr.profile = MotionProfile::constant_turn;
        const double sign = uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        tr.yaw_rate = sign * uniform(config.yaw_rate_min, config.yaw_rate_max);
      } else if (u < config.stationary_fraction + config.turn_fraction + config.stop_and_go_fraction) {
        tr.profile = MotionProfile::stop_and_go;
        tr.stop_period = uniform(3.0, 6.0);
        tr.stop_phase = uniform(-std::numbers::pi, std::numbers::pi);
      } else {
        tr.profile = MotionProfile::straight;
      }

      bool placed = false;
      for (int attempt = 0; attempt < config.max_placement_retries && !placed; ++attempt) {
        const double half = 0.5 * actor.size.length;
        BoxPose p{uniform(-r + half, r - half), uniform(-r + half, r - half), config.ground_z + 0.5 * actor.size.height,
                  uniform(-std::numbers::pi, std::numbers::pi)};
        if (boxes_overlap(p, actor.size, ego_box, ego_size, kMargin)) continue;
        bool clash = false;
        for (const auto& other : scenario.actors)
          if (boxes_overlap(p, actor.size, other.trajectory.origin, other.size, kMargin)) {
            clash = true;
            break;
          }
        if (clash) continue;
        tr.origin = p;
        placed = true;
      }
      if (!placed)
        throw std::runtime_error("generate_scenario: could not place " + std::string(category_name(actor.category)) +
                                 " actor " + std::to_string(actor.id) + " without overlap after " +
                                 std::to_string(config.max_placement_retries) + " attempts (region half-extent " +
                                 std::to_string(r) + " m)");
      scenario.actors.push_back(actor);
    }
  }

  for (int k = 0; k < config.clutter_count; ++k) {
    StaticStructure s;
    const bool pole = uniform(0.0, 1.0) < 0.5;
    s.size = pole ? BoxSize{0.3, 0.3, uniform(2.0, 3.5)} : BoxSize{uniform(2.0, 6.0), uniform(0.3, 0.6), uniform(1.0, 3.0)};
    for (int attempt = 0; attempt < config.max_placement_retries; ++attempt) {
      BoxPose p{uniform(-1.5 * r, 1.5 * r), uniform(-1.5 * r, 1.5 * r), config.ground_z + 0.5 * s.size.height,
                uniform(-std::numbers::pi, std::numbers::pi)};
      bool clash = boxes_overlap(p, s.size, ego_box, ego_size, 1.0);
      for (const auto& a : scenario.actors) clash = clash || boxes_overlap(p, s.size, a.trajectory.origin, a.size, 1.0);
      if (clash) continue;
      s.pose = p;
      scenario.clutter.push_back(s);
      break;
    }
  }
  return scenario;
}

}  // namespace motionnet::sim
