#pragma once

#include "lffuse/camera.hpp"
#include "lffuse/dpv.hpp"

#include <Eigen/Core>

#include <vector>

namespace lffuse {

/// Homography induced by the plane {X : n . (X - C_tgt) = distance}, n a
/// world-frame unit normal. Maps target pixels (homogeneous) to source
/// pixels: H = K_src R_src (I - (C_src - C_tgt) n^T / distance) R_tgt^T K_tgt^-1.
Eigen::Matrix3d plane_induced_homography(const CameraModel& src, const CameraModel& tgt,
                                         const Eigen::Vector3d& normal_world, double distance);

/// Fronto-parallel target plane at depth `depth`: the normal is the target
/// principal axis.
Eigen::Matrix3d plane_homography(const CameraModel& src, const CameraModel& tgt, double depth);

/// A source volume resampled onto the target frustum planes.
struct WarpedVolume {
  Eigen::VectorXd labels;     // target inverse depth
  std::vector<Plane> probs;   // H0 x W0 per plane
  std::vector<Mask> coverage; // 1 where the source contributed

  int n_planes() const { return static_cast<int>(labels.size()); }
};

/// Inverse warp: each target pixel on plane k is mapped through
/// plane_homography into the source image, the source plane nearest to the
/// point's source-frame inverse depth is picked, and its probability is
/// sampled bilinearly. Points beyond half a plane spacing outside the source
/// label span, behind the source, or off the source image are uncovered.
WarpedVolume warp_volume(const Dpv& source, const CameraModel& src, const CameraModel& tgt,
                         const Eigen::VectorXd& target_labels);

struct FusionWeights {
  std::vector<double> w_pos;
  std::vector<double> w_dir;
  double sigma_pos = 1.0;
  double sigma_dir = 0.2;
};

/// Mean pairwise distance between source camera centers, or 1 when fewer
/// than two distinct sources exist.
double default_sigma_pos(const std::vector<CameraModel>& sources);

/// Softmax over sources of -distance/sigma_pos and -angle/sigma_dir, with
/// distance between camera centers and angle between principal axes.
FusionWeights fusion_weights(const std::vector<CameraModel>& sources, const CameraModel& target,
                             double sigma_pos, double sigma_dir);

struct FusionResult {
  Dpv volume;                    // normalized
  std::vector<Plane> unnormalized;
  std::vector<PlaneT<int>> n_rays;
  long zero_mass_pixels = 0;
};

/// Per bin: sum over covering sources of w_pos * w_dir * p, divided by the
/// number of covering sources. With `renormalize_per_bin` the weights are
/// instead renormalized over the covering sources. Sources are accumulated
/// in input order.
FusionResult fuse_volumes(const std::vector<WarpedVolume>& warped, const FusionWeights& weights,
                          bool renormalize_per_bin = false);

}  // namespace lffuse
