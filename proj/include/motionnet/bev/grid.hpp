#pragma once

#include <cstddef>

namespace motionnet::bev {

/// Voxel lattice of the BEV map. Rows (H) follow x, columns (W) follow y, channels follow z.
/// Bins are half-open [lo, hi); the channel count is ceil((z_max - z_min) / dz), so the last
/// z bin may extend beyond z_max while points at or above z_max are still dropped.
struct GridSpec {
  double x_min = -8.0, x_max = 8.0;
  double y_min = -8.0, y_max = 8.0;
  double z_min = -3.0, z_max = 2.0;
  double dx = 0.25, dy = 0.25, dz = 0.4;

  std::size_t rows() const;      // H
  std::size_t cols() const;      // W
  std::size_t channels() const;  // C_z
  std::size_t cells() const { return rows() * cols(); }

  double cell_center_x(std::size_t row) const { return x_min + (static_cast<double>(row) + 0.5) * dx; }
  double cell_center_y(std::size_t col) const { return y_min + (static_cast<double>(col) + 0.5) * dy; }

  /// Throws std::invalid_argument when a range is degenerate or a resolution is not positive.
  void validate() const;

  /// Full-range lattice for real sweeps: [-32,32]^2 x [-3,2] at (0.25, 0.25, 0.4) -> 13 x 256 x 256.
  static GridSpec full_scale();
};

}  // namespace motionnet::bev
