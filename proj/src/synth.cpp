#include "lffuse/synth.hpp"

#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lffuse {

namespace {

// splitmix64 finalizer; textures and anchor samples are pure functions of
// their counters, so generation order never matters.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0) {
  return mix(mix(mix(mix(a) ^ b) ^ c) ^ d);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0); }

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Gradient noise: random unit gradients on the integer lattice. Unlike value
// noise its derivative does not vanish at lattice points, so matching has no
// flat spots. Output lies roughly in [-0.7, 0.7].
double gradient_noise(std::uint64_t seed, double u, double v) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const auto iu = static_cast<std::int64_t>(fu);
  const auto iv = static_cast<std::int64_t>(fv);
  const double du = u - fu;
  const double dv = v - fv;
  auto corner = [&](std::int64_t a, std::int64_t b, double ou, double ov) {
    const double angle = 6.283185307179586 * unit(hash(seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)));
    return std::cos(angle) * ou + std::sin(angle) * ov;
  };
  const double tu = fade(du);
  const double tv = fade(dv);
  const double top = (1.0 - tu) * corner(iu, iv, du, dv) + tu * corner(iu + 1, iv, du - 1.0, dv);
  const double bottom = (1.0 - tu) * corner(iu, iv + 1, du, dv - 1.0) + tu * corner(iu + 1, iv + 1, du - 1.0, dv - 1.0);
  return (1.0 - tv) * top + tv * bottom;
}

bool inside_extent(const LayerSpec& layer, double X, double Y) {
  if (!layer.extent) return true;
  const auto& e = *layer.extent;
  return X >= e.x_min && X <= e.x_max && Y >= e.y_min && Y <= e.y_max;
}

Capture render_capture(const SceneSpec& spec, const RigSpec& rig) {
  const CameraModel& cam = rig.camera;
  const int H = cam.height;
  const int W = cam.width;
  std::vector<Image> views(static_cast<std::size_t>(rig.rows * rig.cols));
  Capture cap;
  cap.rig = rig;
  cap.depth = Plane::Zero(H, W);
  cap.layer = PlaneT<int>::Constant(H, W, -1);
  const int rc = (rig.rows - 1) / 2;
  const int cc = (rig.cols - 1) / 2;
  parallel_for(rig.rows * rig.cols, [&](std::ptrdiff_t i) {
    const int r = static_cast<int>(i) / rig.cols;
    const int c = static_cast<int>(i) % rig.cols;
    const Eigen::Vector3d offset((c - cc) * rig.baseline, (r - rc) * rig.baseline, 0.0);
    Image img(H, W, 3);
    const bool central = r == rc && c == cc;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const RayHit hit = trace_ray(spec, cam, offset, x, y);
        if (hit.layer < 0) throw Error(ErrorCode::Scene, "ray of rig '" + rig.name + "' escapes every layer");
        const Eigen::Vector3d rgb = layer_color(spec, hit.layer, hit.point.x(), hit.point.y());
        for (int ch = 0; ch < 3; ++ch) img.channels[ch](y, x) = rgb[ch];
        if (central) {
          cap.depth(y, x) = hit.depth;
          cap.layer(y, x) = hit.layer;
        }
      }
    }
    views[static_cast<std::size_t>(i)] = std::move(img);
  });
  cap.lf = LightField(rig.rows, rig.cols, std::move(views));
  cap.disparity = cam.fx * rig.baseline / cap.depth;
  return cap;
}

}  // namespace

void SceneSpec::validate() const {
  if (layers.empty()) throw Error(ErrorCode::Scene, "scene needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!(layers[i].depth > 0.0) || !(layers[i].cell_size > 0.0))
      throw Error(ErrorCode::Scene, "layer depth and cell size must be positive");
    if (i > 0 && !(layers[i].depth > layers[i - 1].depth))
      throw Error(ErrorCode::Scene, "layer depths must be strictly increasing");
  }
  auto check_rig = [](const RigSpec& rig) {
    rig.camera.validate();
    if (!(rig.baseline > 0.0)) throw Error(ErrorCode::Scene, "rig baseline must be positive");
    if (rig.rows < 1 || rig.cols < 1 || rig.rows % 2 == 0 || rig.cols % 2 == 0)
      throw Error(ErrorCode::Scene, "rig angular grid must be odd");
  };
  for (const auto& r : rigs) check_rig(r);
  check_rig(target);
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "single-plane") return SceneKind::SinglePlane;
  if (name == "two-plane") return SceneKind::TwoPlane;
  if (name == "three-plane") return SceneKind::ThreePlane;
  throw Error(ErrorCode::Parameter, "unknown scene '" + name + "'");
}

const char* to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::SinglePlane: return "single-plane";
    case SceneKind::TwoPlane: return "two-plane";
    case SceneKind::ThreePlane: return "three-plane";
  }
  return "unknown";
}

CameraModel look_at_camera(const Eigen::Vector3d& center, const Eigen::Vector3d& look_at, double focal, int width,
                           int height) {
  const Eigen::Vector3d z = (look_at - center).normalized();
  const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  CameraModel cam;
  cam.R.row(0) = x.transpose();
  cam.R.row(1) = y.transpose();
  cam.R.row(2) = z.transpose();
  cam.tau = -cam.R * center;
  cam.fx = cam.fy = focal;
  cam.cx = (width - 1) / 2.0;
  cam.cy = (height - 1) / 2.0;
  cam.width = width;
  cam.height = height;
  return cam;
}

SceneSpec make_scene_spec(SceneKind kind, std::uint64_t seed, int size) {
  SceneSpec spec;
  spec.seed = seed;
  const double s = size / 128.0;
  // Texture cells of roughly twenty pixels at the reference focal length.
  auto layer = [&](double depth, std::optional<LayerExtent> extent, std::uint64_t salt) {
    return LayerSpec{depth, hash(seed, salt), 20.0 * depth / (110.0 * s), extent};
  };
  switch (kind) {
    case SceneKind::SinglePlane:
      spec.layers = {layer(3.0, std::nullopt, 1)};
      break;
    case SceneKind::TwoPlane:
      spec.layers = {layer(2.5, LayerExtent{-0.9, 0.25, -0.7, 0.6}, 1), layer(4.5, std::nullopt, 2)};
      break;
    case SceneKind::ThreePlane:
      spec.layers = {layer(2.5, LayerExtent{-1.0, 0.1, -0.3, 0.9}, 1),
                     layer(3.5, LayerExtent{0.0, 1.6, -1.0, 0.5}, 2), layer(5.0, std::nullopt, 3)};
      break;
  }
  const Eigen::Vector3d focus(0.0, 0.0, 3.5);
  spec.target = {"target", look_at_camera(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 1), 110.0 * s, size, size),
                 7, 7, 0.01};
  spec.rigs = {
      {"rig0", look_at_camera({-0.35, 0.05, -0.1}, focus, 100.0 * s, size, size), 7, 7, 0.02},
      {"rig1", look_at_camera({0.3, -0.05, 0.0}, focus, 128.0 * s, size, size), 7, 7, 0.012},
      {"rig2", look_at_camera({0.05, 0.3, 0.15}, focus, 80.0 * s, size, size), 7, 7, 0.03},
  };
  return spec;
}

RayHit trace_ray(const SceneSpec& spec, const CameraModel& camera, const Eigen::Vector3d& offset_cam, double x,
                 double y) {
  const Eigen::Vector3d origin = camera.center() + camera.R.transpose() * offset_cam;
  const Eigen::Vector3d dir_cam((x - camera.cx) / camera.fx, (y - camera.cy) / camera.fy, 1.0);
  const Eigen::Vector3d dir = camera.R.transpose() * dir_cam;
  RayHit best;
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    if (dir.z() == 0.0) continue;
    // dir_cam has unit z, so the ray parameter is the camera-frame depth.
    const double t = (layer.depth - origin.z()) / dir.z();
    if (!(t > 0.0) || t >= best_t) continue;
    const Eigen::Vector3d p = origin + t * dir;
    if (!inside_extent(layer, p.x(), p.y())) continue;
    best_t = t;
    best = {t, static_cast<int>(i), p};
  }
  return best;
}

Eigen::Vector3d layer_color(const SceneSpec& spec, int layer, double X, double Y) {
  const auto& l = spec.layers[static_cast<std::size_t>(layer)];
  Eigen::Vector3d rgb;
  for (int ch = 0; ch < 3; ++ch) {
    const std::uint64_t base = hash(l.texture_seed, static_cast<std::uint64_t>(ch));
    const double coarse = gradient_noise(hash(base, 1), X / l.cell_size, Y / l.cell_size);
    const double fine = gradient_noise(hash(base, 2), 2.0 * X / l.cell_size, 2.0 * Y / l.cell_size);
    rgb[ch] = std::clamp(0.5 + 0.55 * (0.7 * coarse + 0.3 * fine), 0.0, 1.0);
  }
  return rgb;
}

Mask away_from_edges(const PlaneT<int>& layer, int radius) {
  const auto H = layer.rows();
  const auto W = layer.cols();
  Mask out = Mask::Zero(H, W);
  for (Eigen::Index y = 0; y < H; ++y)
    for (Eigen::Index x = 0; x < W; ++x) {
      bool uniform = true;
      for (Eigen::Index dy = -radius; dy <= radius && uniform; ++dy)
        for (Eigen::Index dx = -radius; dx <= radius && uniform; ++dx) {
          const auto yy = std::clamp<Eigen::Index>(y + dy, 0, H - 1);
          const auto xx = std::clamp<Eigen::Index>(x + dx, 0, W - 1);
          uniform = layer(yy, xx) == layer(y, x);
        }
      out(y, x) = uniform ? 1 : 0;
    }
  return out;
}

Mask covisible_target_mask(const SceneBundle& bundle, int edge_radius) {
  const Capture& tgt = bundle.target;
  const CameraModel& cam = tgt.rig.camera;
  Mask out = away_from_edges(tgt.layer, edge_radius);
  std::vector<Mask> safe;
  for (const auto& s : bundle.sources) safe.push_back(away_from_edges(s.layer, edge_radius));
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      if (!out(y, x)) continue;
      const Eigen::Vector3d X = back_project(cam, Eigen::Vector2d(x, y), tgt.depth(y, x));
      for (std::size_t i = 0; i < bundle.sources.size() && out(y, x); ++i) {
        const CameraModel& other = bundle.sources[i].rig.camera;
        const Eigen::Vector3d Xc = other.R * X + other.tau;
        bool ok = Xc.z() > 0.0;
        if (ok) {
          const Projection p = anchor_depth(other, X);
          ok = other.contains(p.pixel.x(), p.pixel.y());
          if (ok) {
            const RayHit hit = trace_ray(bundle.spec, other, Eigen::Vector3d::Zero(), p.pixel.x(), p.pixel.y());
            ok = hit.layer == tgt.layer(y, x) && std::abs(hit.depth - p.depth) <= 1e-6 * p.depth &&
                 safe[i](std::lround(p.pixel.y()), std::lround(p.pixel.x()));
          }
        }
        if (!ok) out(y, x) = 0;
      }
    }
  return out;
}

SceneBundle generate_scene(const SceneSpec& spec) {
  spec.validate();
  SceneBundle bundle;
  bundle.spec = spec;
  for (const auto& rig : spec.rigs) bundle.sources.push_back(render_capture(spec, rig));
  bundle.target = render_capture(spec, spec.target);

  std::vector<const Capture*> views;
  for (const auto& c : bundle.sources) views.push_back(&c);
  views.push_back(&bundle.target);
  constexpr int kEdgeRadius = 4;
  constexpr double kMargin = 2.0;
  std::vector<Mask> safe;
  for (const auto* v : views) safe.push_back(away_from_edges(v->layer, kEdgeRadius));

  long next_id = 1;
  for (std::size_t vi = 0; vi < views.size(); ++vi) {
    const CameraModel& cam = views[vi]->rig.camera;
    for (int s = 0; s < spec.anchor_samples_per_view; ++s) {
      const std::uint64_t h = hash(spec.seed, 0xa5c40000ULL + vi, static_cast<std::uint64_t>(s));
      const double x = kMargin + unit(hash(h, 1)) * (cam.width - 1 - 2 * kMargin);
      const double y = kMargin + unit(hash(h, 2)) * (cam.height - 1 - 2 * kMargin);
      const RayHit hit = trace_ray(spec, cam, Eigen::Vector3d::Zero(), x, y);
      if (hit.layer < 0) continue;
      std::vector<std::pair<ViewId, AnchorObservation>> seen;
      for (std::size_t vj = 0; vj < views.size(); ++vj) {
        const CameraModel& other = views[vj]->rig.camera;
        const Eigen::Vector3d Xc = other.R * hit.point + other.tau;
        if (!(Xc.z() > 0.0)) continue;
        const Projection p = anchor_depth(other, hit.point);
        if (p.pixel.x() < kMargin || p.pixel.y() < kMargin || p.pixel.x() > other.width - 1 - kMargin ||
            p.pixel.y() > other.height - 1 - kMargin)
          continue;
        const RayHit check = trace_ray(spec, other, Eigen::Vector3d::Zero(), p.pixel.x(), p.pixel.y());
        if (check.layer != hit.layer || std::abs(check.depth - p.depth) > 1e-6 * p.depth) continue;
        if (!safe[vj](std::lround(p.pixel.y()), std::lround(p.pixel.x()))) continue;
        seen.emplace_back(static_cast<ViewId>(vj + 1), AnchorObservation{next_id, p.pixel.x(), p.pixel.y(), p.depth});
      }
      if (seen.size() < 2) continue;
      bundle.anchors.points[next_id] = hit.point;
      bundle.anchor_colors[next_id] = layer_color(spec, hit.layer, hit.point.x(), hit.point.y());
      for (auto& [view, obs] : seen) bundle.anchors.observations[view].push_back(obs);
      ++next_id;
    }
  }
  for (std::size_t vi = 0; vi < views.size(); ++vi) {
    const ViewId id = static_cast<ViewId>(vi + 1);
    if (bundle.anchors.view(id).size() < 2)
      throw Error(ErrorCode::Scene, "view '" + views[vi]->rig.name + "' sees fewer than 2 anchors");
  }
  return bundle;
}

SparseModel bundle_sparse_model(const SceneBundle& bundle) {
  SparseModel model;
  std::vector<const Capture*> views;
  for (const auto& c : bundle.sources) views.push_back(&c);
  views.push_back(&bundle.target);
  std::map<long, std::vector<ColmapTrackElement>> tracks;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const long id = static_cast<long>(i + 1);
    const CameraModel& cam = views[i]->rig.camera;
    model.cameras[id] = ColmapCamera{"PINHOLE", cam.width, cam.height, {cam.fx, cam.fy, cam.cx, cam.cy}};
    ColmapImage img;
    img.camera_id = id;
    img.name = views[i]->rig.name;
    // Adding +0.0 turns -0.0 into 0.0 so the text files carry no "-0".
    img.qvec = quaternion_from_rotation(cam.R).array() + 0.0;
    img.tvec = cam.tau.array() + 0.0;
    for (const auto& o : bundle.anchors.view(id)) {
      tracks[o.point_id].push_back({id, static_cast<long>(img.observations.size())});
      img.observations.push_back({o.x, o.y, o.point_id});
    }
    model.images[id] = std::move(img);
  }
  for (const auto& [id, X] : bundle.anchors.points) {
    ColmapPoint3D p;
    p.xyz = X;
    const Eigen::Vector3d& c = bundle.anchor_colors.at(id);
    for (int k = 0; k < 3; ++k) p.rgb[k] = static_cast<int>(std::lround(255.0 * std::clamp(c[k], 0.0, 1.0)));
    p.error = 0.0;
    p.track = tracks[id];
    model.points3d[id] = std::move(p);
  }
  return model;
}

void emit_colmap_fixture(const SceneBundle& bundle, const std::string& dir) {
  write_sparse_model(dir, bundle_sparse_model(bundle));
}

}  // namespace lffuse
