#pragma once

#include <cstdint>
#include <vector>

#include "motionnet/geometry.hpp"
#include "motionnet/sim/scenario.hpp"

namespace motionnet::sim {

using PointCloud = std::vector<geometry::Vec3>;

struct LidarConfig {
  double surface_density = 24.0;  // expected points per m^2 of box surface before attenuation
  double ground_density = 24.0;   // expected points per m^2 of ground before attenuation
  double ground_extent = 12.0;    // ground sampled over [-e, e]^2 around the sensor
  double range_scale = 20.0;      // keep probability 1 / (1 + (range / scale)^2)
  double max_range = 40.0;
  double noise_sigma = 0.02;
  bool ground = true;
  bool clutter = true;
};

/// Points on actor box surfaces (sides and top), static clutter and the ground plane at time t,
/// in the ego frame at t. Surface samples are Poisson with mean density * area, thinned by range.
PointCloud sample_lidar(const Scenario& scenario, double t, const LidarConfig& config, std::uint64_t seed);

/// Samples the four sides and the top of one box given in the sensor frame, with range
/// thinning and noise applied as in sample_lidar.
PointCloud sample_box_surface(const BoxPose& pose_in_sensor, const BoxSize& size, const LidarConfig& config,
                              std::uint64_t seed);

}  // namespace motionnet::sim
