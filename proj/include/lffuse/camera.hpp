#pragma once

#include <Eigen/Core>

namespace lffuse {

/// Pinhole view. World points map to the camera frame as Xc = R * X + tau.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d tau = Eigen::Vector3d::Zero();
  int width = 1;
  int height = 1;

  /// Throws Error(Camera) when an invariant does not hold.
  void validate() const;

  Eigen::Matrix3d intrinsics() const;
  Eigen::Matrix3d intrinsics_inverse() const;

  /// Optical axis in world coordinates (third row of R).
  Eigen::Vector3d principal_axis() const { return R.row(2).transpose(); }

  /// Camera center in world coordinates, -R^T tau.
  Eigen::Vector3d center() const { return -R.transpose() * tau; }

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
  }
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth;
};

/// Projects a world point; depth is the camera-frame z. Throws
/// Error(BehindCamera) for z <= 0.
Projection anchor_depth(const CameraModel& camera, const Eigen::Vector3d& world_point);

/// Inverse of anchor_depth: world point at camera-frame depth z under pixel.
Eigen::Vector3d back_project(const CameraModel& camera, const Eigen::Vector2d& pixel, double depth);

/// Unit quaternion (w, x, y, z) to rotation matrix and back.
Eigen::Matrix3d rotation_from_quaternion(double qw, double qx, double qy, double qz);
Eigen::Vector4d quaternion_from_rotation(const Eigen::Matrix3d& R);

}  // namespace lffuse
