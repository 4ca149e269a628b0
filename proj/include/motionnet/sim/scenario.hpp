#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "motionnet/geometry.hpp"

namespace motionnet::sim {

enum class Category : std::uint8_t { background = 0, vehicle = 1, pedestrian = 2, bicycle = 3, others = 4 };
inline constexpr int kNumCategories = 5;
std::string_view category_name(Category category);

/// Box centre and heading in some frame; z is the box centre height.
struct BoxPose {
  double x = 0.0, y = 0.0, z = 0.0, yaw = 0.0;
};

struct BoxSize {
  double length = 1.0, width = 1.0, height = 1.0;
};

enum class MotionProfile : std::uint8_t { stationary, straight, constant_turn, stop_and_go };

/// Closed-form planar motion defined for every t (negative t is the past).
/// `origin` is the pose at t = 0.
struct Trajectory {
  MotionProfile profile = MotionProfile::stationary;
  BoxPose origin;
  double speed = 0.0;        // m/s; mean speed for stop_and_go
  double yaw_rate = 0.0;     // rad/s, constant_turn only
  double stop_period = 4.0;  // s, stop_and_go only
  double stop_phase = 0.0;   // rad, stop_and_go only

  BoxPose pose_at(double t) const;
};

struct RigidActor {
  int id = 0;  // >= 1
  Category category = Category::vehicle;
  BoxSize size;
  Trajectory trajectory;
};

/// Static background structure (walls, poles, parked clutter).
struct StaticStructure {
  BoxPose pose;
  BoxSize size;
};

struct Scenario {
  std::vector<RigidActor> actors;
  Trajectory ego;  // planar; the sensor origin sits at z = 0
  std::vector<StaticStructure> clutter;
  double ground_z = -1.8;

  /// Ego frame -> global frame.
  geometry::Mat4 ego_pose(double t) const;
};

struct CategorySpec {
  int min_count = 0;
  int max_count = 0;
  double speed_min = 0.0;
  double speed_max = 0.0;
  BoxSize size_min;
  BoxSize size_max;
};

struct ScenarioConfig {
  // Indexed by category - 1 (vehicle, pedestrian, bicycle, others).
  std::array<CategorySpec, 4> categories{{
      {1, 3, 2.0, 12.0, {3.8, 1.6, 1.4}, {5.2, 2.1, 2.0}},
      {0, 2, 0.6, 2.0, {0.5, 0.5, 1.6}, {0.9, 0.9, 1.9}},
      {0, 1, 2.0, 7.0, {1.6, 0.5, 1.3}, {2.0, 0.8, 1.8}},
      {0, 1, 0.0, 4.0, {0.6, 0.6, 0.5}, {4.5, 2.2, 2.5}},
  }};
  double region_half_extent = 8.0;  // actors are placed in [-r, r]^2 around the ego at t = 0
  double stationary_fraction = 0.25;
  double turn_fraction = 0.3;
  double stop_and_go_fraction = 0.1;
  double yaw_rate_min = 0.5;
  double yaw_rate_max = 1.0;
  double ego_speed_min = 0.0;
  double ego_speed_max = 0.0;
  double ego_yaw_rate_max = 0.0;
  int clutter_count = 6;
  double ground_z = -1.8;
  int max_placement_retries = 200;
};

/// Deterministic in (config, seed). Actor boxes are pairwise disjoint at t = 0 and clear of
/// the ego footprint; throws std::runtime_error when placement fails after the retry budget.
Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

// 2D oriented-box helpers.
bool point_in_box(double px, double py, const BoxPose& pose, const BoxSize& size);
bool boxes_overlap(const BoxPose& a, const BoxSize& sa, const BoxPose& b, const BoxSize& sb, double margin = 0.0);

}  // namespace motionnet::sim
