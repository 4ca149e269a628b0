#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace motionnet::geometry {

using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Rigid transform with a rotation about +z.
Mat4 planar_pose(double x, double y, double z, double yaw);

/// Inverse of a rigid transform (R^T, -R^T t).
Mat4 rigid_inverse(const Mat4& pose);

/// Rotation block orthonormal with det +1 and last row (0,0,0,1), all within `tol`.
bool is_rigid(const Mat4& pose, double tol = 1e-6);

/// Heading of the transformed x axis projected onto the ground plane.
double yaw_of(const Mat4& pose);

/// Wraps to (-pi, pi].
double wrap_angle(double angle);

inline Vec3 apply(const Mat4& pose, const Vec3& p) { return pose.topLeftCorner<3, 3>() * p + pose.topRightCorner<3, 1>(); }

/// 2D projection of a rigid transform: rotation angle and translation in the ground plane.
struct Planar {
  double yaw = 0.0;
  Vec2 translation = Vec2::Zero();
  Vec2 apply(const Vec2& p) const;
  Vec2 rotate(const Vec2& v) const;
};
Planar to_planar(const Mat4& pose);

}  // namespace motionnet::geometry
