#include "lffuse/camera.hpp"

#include "lffuse/error.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>

namespace lffuse {

void CameraModel::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Camera, msg); };
  if (!(fx > 0.0) || !(fy > 0.0)) fail("focal lengths must be positive");
  if (width <= 0 || height <= 0) fail("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    fail("principal point outside the image");
  const double ortho = (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9) || std::abs(R.determinant() - 1.0) > 1e-9)
    fail("rotation is not a proper orthonormal matrix");
  if (!tau.allFinite()) fail("translation is not finite");
}

Eigen::Matrix3d CameraModel::intrinsics() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Eigen::Matrix3d CameraModel::intrinsics_inverse() const {
  if (!(fx != 0.0) || !(fy != 0.0)) throw Error(ErrorCode::Camera, "intrinsics are not invertible");
  Eigen::Matrix3d Kinv;
  Kinv << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return Kinv;
}

Projection anchor_depth(const CameraModel& camera, const Eigen::Vector3d& world_point) {
  const Eigen::Vector3d Xc = camera.R * world_point + camera.tau;
  if (!(Xc.z() > 0.0)) {
    std::ostringstream os;
    os << "point is behind the camera (z = " << Xc.z() << ")";
    throw Error(ErrorCode::BehindCamera, os.str());
  }
  return {{camera.fx * Xc.x() / Xc.z() + camera.cx, camera.fy * Xc.y() / Xc.z() + camera.cy}, Xc.z()};
}

Eigen::Vector3d back_project(const CameraModel& camera, const Eigen::Vector2d& pixel, double depth) {
  const Eigen::Vector3d Xc((pixel.x() - camera.cx) / camera.fx * depth,
                           (pixel.y() - camera.cy) / camera.fy * depth, depth);
  return camera.R.transpose() * (Xc - camera.tau);
}

Eigen::Matrix3d rotation_from_quaternion(double qw, double qx, double qy, double qz) {
  return Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
}

Eigen::Vector4d quaternion_from_rotation(const Eigen::Matrix3d& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  // COLMAP writes the hemisphere with non-negative w.
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

}  // namespace lffuse
