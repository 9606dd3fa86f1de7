#pragma once

#include "lffuse/anchors.hpp"
#include "lffuse/camera.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace lffuse {

/// Intrinsics entry of cameras.txt. Only pinhole models are accepted.
struct ColmapCamera {
  std::string model;  // "PINHOLE" or "SIMPLE_PINHOLE"
  int width = 0;
  int height = 0;
  std::vector<double> params;

  double fx() const { return params[0]; }
  double fy() const { return model == "SIMPLE_PINHOLE" ? params[0] : params[1]; }
  double cx() const { return model == "SIMPLE_PINHOLE" ? params[1] : params[2]; }
  double cy() const { return model == "SIMPLE_PINHOLE" ? params[2] : params[3]; }
};

struct ColmapObservation {
  double x = 0.0;
  double y = 0.0;
  long point3d_id = -1;
};

struct ColmapImage {
  long camera_id = 0;
  std::string name;
  Eigen::Vector4d qvec{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z), world to camera
  Eigen::Vector3d tvec = Eigen::Vector3d::Zero();
  std::vector<ColmapObservation> observations;
};

struct ColmapTrackElement {
  long image_id = 0;
  long point2d_idx = 0;
};

struct ColmapPoint3D {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  std::array<int, 3> rgb{0, 0, 0};
  double error = 0.0;
  std::vector<ColmapTrackElement> track;
};

/// Sparse reconstruction in COLMAP's text layout. Pixel coordinates are
/// taken verbatim; the library places pixel centers at integer coordinates.
struct SparseModel {
  std::map<long, ColmapCamera> cameras;
  std::map<long, ColmapImage> images;
  std::map<long, ColmapPoint3D> points3d;

  /// Full pinhole model (intrinsics + pose) of one registered image.
  CameraModel camera_model(long image_id) const;

  /// Image id registered under `name`; throws Error(Parse) when absent.
  long image_id(const std::string& name) const;
};

/// Reads cameras.txt, images.txt and points3D.txt from `dir`.
SparseModel parse_sparse_model(const std::string& dir);

/// Writes the three text files with shortest round-trip number formatting.
void write_sparse_model(const std::string& dir, const SparseModel& model);

/// Projects every tracked point into each requested view. Points behind the
/// camera or off-image are dropped and counted. Per-view depth ranges are
/// filled with the default percentile rule when a view has >= 2 anchors.
AnchorSet build_anchor_set(const SparseModel& model, const std::vector<long>& view_ids);

/// Nearest-rank percentile depths of a view, widened by `margin`.
DepthRange compute_depth_range(const AnchorSet& anchors, ViewId view, double lo_pct = 0.01,
                               double hi_pct = 0.99, double margin = 1.2);

}  // namespace lffuse
