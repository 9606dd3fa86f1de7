#pragma once

#include <Eigen/Core>

#include <map>
#include <utility>
#include <vector>

namespace lffuse {

using ViewId = long;

struct AnchorObservation {
  long point_id = 0;
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;  // camera-frame z, world units
};

struct DepthRange {
  double min = 0.0;
  double max = 0.0;
};

/// Sparse triangulated points and their per-view projections.
struct AnchorSet {
  std::map<long, Eigen::Vector3d> points;
  std::map<ViewId, std::vector<AnchorObservation>> observations;
  std::map<ViewId, DepthRange> depth_ranges;
  /// Points dropped per view for landing behind the camera or off-image.
  std::map<ViewId, long> dropped;

  const std::vector<AnchorObservation>& view(ViewId id) const;
};

}  // namespace lffuse
