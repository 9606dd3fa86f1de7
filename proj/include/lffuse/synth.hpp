#pragma once

#include "lffuse/anchors.hpp"
#include "lffuse/camera.hpp"
#include "lffuse/colmap.hpp"
#include "lffuse/image.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lffuse {

/// Axis-aligned opaque region of a layer, in world X/Y.
struct LayerExtent {
  double x_min, x_max, y_min, y_max;
};

/// Textured plane at world Z = depth, facing the cameras.
struct LayerSpec {
  double depth = 1.0;
  std::uint64_t texture_seed = 0;
  double cell_size = 0.05;                 // world units per noise cell
  std::optional<LayerExtent> extent;       // absent: unbounded
};

/// Light-field capture: central pinhole view plus a regular grid of
/// sub-aperture views offset by `baseline` per angular step in the camera's
/// own x/y directions.
struct RigSpec {
  std::string name;
  CameraModel camera;
  int rows = 7;
  int cols = 7;
  double baseline = 0.01;
};

struct SceneSpec {
  std::vector<LayerSpec> layers;  // strictly increasing depth
  std::vector<RigSpec> rigs;      // source captures
  RigSpec target;                 // target view; its grid defines the truth LF
  std::uint64_t seed = 0;
  int anchor_samples_per_view = 120;

  void validate() const;
};

enum class SceneKind { SinglePlane, TwoPlane, ThreePlane };

SceneKind parse_scene_kind(const std::string& name);
const char* to_string(SceneKind kind);

/// Built-in scenes: three heterogeneous source rigs (different focal lengths
/// and baselines) around a target camera at the origin.
SceneSpec make_scene_spec(SceneKind kind, std::uint64_t seed, int size = 128);

/// Pose looking from `center` towards `look_at`, image y along world +Y.
CameraModel look_at_camera(const Eigen::Vector3d& center, const Eigen::Vector3d& look_at, double focal, int width,
                           int height);

struct RayHit {
  double depth = 0.0;  // camera-frame z
  int layer = -1;      // -1: nothing hit
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

/// Casts the ray through pixel (x, y) of `camera`, displaced by
/// `offset_cam` (camera frame) from its center.
RayHit trace_ray(const SceneSpec& spec, const CameraModel& camera, const Eigen::Vector3d& offset_cam, double x,
                 double y);

/// RGB color of layer `layer` at world point (X, Y).
Eigen::Vector3d layer_color(const SceneSpec& spec, int layer, double X, double Y);

struct Capture {
  RigSpec rig;
  LightField lf;
  Plane depth;                 // central view, camera-frame z
  Plane disparity;             // fx * baseline / z
  PlaneT<int> layer;           // layer id per central pixel
};

struct SceneBundle {
  SceneSpec spec;
  std::vector<Capture> sources;
  Capture target;              // target.lf is the analytic truth light field
  AnchorSet anchors;           // view id i + 1 for sources[i], sources.size() + 1 for target
  std::map<long, Eigen::Vector3d> anchor_colors;

  ViewId source_view_id(std::size_t i) const { return static_cast<ViewId>(i + 1); }
  ViewId target_view_id() const { return static_cast<ViewId>(sources.size() + 1); }
  const Image& target_image() const { return target.lf.central(); }
};

SceneBundle generate_scene(const SceneSpec& spec);

/// COLMAP text model of the bundle's central cameras and anchors.
SparseModel bundle_sparse_model(const SceneBundle& bundle);
void emit_colmap_fixture(const SceneBundle& bundle, const std::string& dir);

/// Pixels of `layer` whose (2r+1)^2 neighbourhood is all one layer.
Mask away_from_edges(const PlaneT<int>& layer, int radius);

/// Target pixels away from layer edges whose surface point is seen
/// unoccluded by the central view of every source rig.
Mask covisible_target_mask(const SceneBundle& bundle, int edge_radius);

}  // namespace lffuse
