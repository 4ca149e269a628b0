#include "motionnet/geometry.hpp"

#include <cmath>
#include <numbers>

namespace motionnet::geometry {

Mat4 planar_pose(double x, double y, double z, double yaw) {
  Mat4 m = Mat4::Identity();
  const double c = std::cos(yaw), s = std::sin(yaw);
  m(0, 0) = c;
  m(0, 1) = -s;
  m(1, 0) = s;
  m(1, 1) = c;
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return m;
}

Mat4 rigid_inverse(const Mat4& pose) {
  Mat4 inv = Mat4::Identity();
  const Eigen::Matrix3d rt = pose.topLeftCorner<3, 3>().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * pose.topRightCorner<3, 1>();
  return inv;
}

bool is_rigid(const Mat4& pose, double tol) {
  if (!pose.allFinite()) return false;
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(r.determinant() - 1.0) > tol) return false;
  const Eigen::RowVector4d last = pose.row(3);
  return (last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() <= tol;
}

double yaw_of(const Mat4& pose) { return std::atan2(pose(1, 0), pose(0, 0)); }

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  angle = std::fmod(angle + std::numbers::pi, two_pi);
  if (angle <= 0) angle += two_pi;
  return angle - std::numbers::pi;
}

Vec2 Planar::apply(const Vec2& p) const { return rotate(p) + translation; }

Vec2 Planar::rotate(const Vec2& v) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Planar to_planar(const Mat4& pose) { return Planar{yaw_of(pose), Vec2(pose(0, 3), pose(1, 3))}; }

}  // namespace motionnet::geometry
