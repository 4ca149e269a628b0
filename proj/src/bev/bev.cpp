#include "motionnet/bev/bev.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace motionnet::bev {

namespace {

std::size_t bin_count(double lo, double hi, double step) {
  // A tiny slack keeps exact multiples such as 64 / 0.25 from rounding up.
  return static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9));
}

}  // namespace

std::size_t GridSpec::rows() const { return bin_count(x_min, x_max, dx); }
std::size_t GridSpec::cols() const { return bin_count(y_min, y_max, dy); }
std::size_t GridSpec::channels() const { return bin_count(z_min, z_max, dz); }

void GridSpec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min))
    throw std::invalid_argument("grid: ranges must be non-degenerate");
  if (!(dx > 0) || !(dy > 0) || !(dz > 0)) throw std::invalid_argument("grid: voxel sizes must be positive");
  if (rows() < 1 || cols() < 1 || channels() < 1) throw std::invalid_argument("grid: empty lattice");
}

GridSpec GridSpec::full_scale() { return GridSpec{-32.0, 32.0, -32.0, 32.0, -3.0, 2.0, 0.25, 0.25, 0.4}; }

SyncMode parse_sync_mode(std::string_view text) {
  if (text == "gt") return SyncMode::gt;
  if (text == "none") return SyncMode::none;
  throw std::invalid_argument("unknown sync mode '" + std::string(text) + "' (expected gt or none)");
}

std::string_view to_string(SyncMode mode) { return mode == SyncMode::gt ? "gt" : "none"; }

std::vector<std::uint8_t> BEVSequence::keyframe_nonempty() const {
  if (maps.empty()) throw std::logic_error("empty BEV sequence");
  return nonempty_columns(maps.back(), grid);
}

std::vector<sim::PointCloud> compensate_ego(const sim::Clip& clip, SyncMode mode) {
  const std::size_t cur = clip.current_index();
  std::vector<sim::PointCloud> out;
  out.reserve(cur + 1);
  if (mode == SyncMode::none) {
    for (std::size_t i = 0; i <= cur; ++i) out.push_back(clip.frames[i].points);
    return out;
  }
  for (std::size_t i = 0; i <= cur; ++i)
    if (!geometry::is_rigid(clip.frames[i].ego_pose, 1e-6))
      throw std::invalid_argument("compensate_ego: ego pose of frame " + std::to_string(i) + " is not a rigid transform");
  const geometry::Mat4 to_current = geometry::rigid_inverse(clip.frames[cur].ego_pose);
  for (std::size_t i = 0; i <= cur; ++i) {
    if (i == cur) {
      out.push_back(clip.frames[i].points);
      continue;
    }
    const geometry::Mat4 m = to_current * clip.frames[i].ego_pose;
    const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
    const geometry::Vec3 t = m.topRightCorner<3, 1>();
    sim::PointCloud pts;
    pts.reserve(clip.frames[i].points.size());
    for (const auto& p : clip.frames[i].points) pts.push_back(r * p + t);
    out.push_back(std::move(pts));
  }
  return out;
}

Occupancy voxelize(std::span<const geometry::Vec3> points, const GridSpec& grid) {
  const std::size_t h = grid.rows(), w = grid.cols(), cz = grid.channels();
  Occupancy map(cz * h * w, 0);
  for (const auto& p : points) {
    if (!(p.x() >= grid.x_min && p.x() < grid.x_max && p.y() >= grid.y_min && p.y() < grid.y_max &&
          p.z() >= grid.z_min && p.z() < grid.z_max))
      continue;
    const auto i = static_cast<std::size_t>(std::floor((p.x() - grid.x_min) / grid.dx));
    const auto j = static_cast<std::size_t>(std::floor((p.y() - grid.y_min) / grid.dy));
    const auto k = static_cast<std::size_t>(std::floor((p.z() - grid.z_min) / grid.dz));
    if (i >= h || j >= w || k >= cz) continue;
    map[(k * h + i) * w + j] = 1;
  }
  return map;
}

std::vector<std::uint8_t> nonempty_columns(const Occupancy& map, const GridSpec& grid) {
  const std::size_t cells = grid.cells(), cz = grid.channels();
  if (map.size() != cells * cz) throw std::invalid_argument("nonempty_columns: map does not match grid");
  std::vector<std::uint8_t> mask(cells, 0);
  for (std::size_t k = 0; k < cz; ++k)
    for (std::size_t c = 0; c < cells; ++c) mask[c] |= map[k * cells + c];
  return mask;
}

BEVSequence build_input(const sim::Clip& clip, const GridSpec& grid, SyncMode mode) {
  grid.validate();
  BEVSequence seq;
  seq.grid = grid;
  const auto frames = compensate_ego(clip, mode);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    seq.maps.push_back(voxelize(frames[i], grid));
    seq.timestamps.push_back(clip.frames[i].timestamp);
  }
  return seq;
}

nn::Tensor to_tensor(std::span<const BEVSequence* const> batch) {
  if (batch.empty()) throw std::invalid_argument("to_tensor: empty batch");
  const BEVSequence& first = *batch.front();
  const std::size_t t = first.frames(), cz = first.grid.channels(), h = first.grid.rows(), w = first.grid.cols();
  const std::size_t frame = cz * h * w;
  std::vector<double> data(batch.size() * t * frame);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const BEVSequence& s = *batch[b];
    if (s.frames() != t || s.grid.channels() != cz || s.grid.rows() != h || s.grid.cols() != w)
      throw std::invalid_argument("to_tensor: batch entries disagree in shape");
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t k = 0; k < frame; ++k) data[(b * t + i) * frame + k] = s.maps[i][k];
  }
  return nn::Tensor::from_data({batch.size(), t, cz, h, w}, std::move(data));
}

}  // namespace motionnet::bev
