#include "lffuse/colmap.hpp"

#include "lffuse/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace lffuse {

namespace fs = std::filesystem;

namespace {

struct Line {
  int number;
  std::vector<std::string> tokens;
};

// Non-comment, non-blank lines of a COLMAP text file, tokenized.
std::vector<Line> read_data_lines(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<Line> lines;
  std::string text;
  int number = 0;
  while (std::getline(is, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos || text[first] == '#') continue;
    std::istringstream ss(text);
    Line line{number, {}};
    for (std::string tok; ss >> tok;) line.tokens.push_back(tok);
    lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void parse_fail(const fs::path& path, int line, const std::string& what) {
  std::ostringstream os;
  os << path.filename().string() << ":" << line << ": " << what;
  throw Error(ErrorCode::Parse, os.str());
}

template <typename T>
T parse_number(const std::string& tok, const fs::path& path, int line) {
  T value{};
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) parse_fail(path, line, "malformed number '" + tok + "'");
  return value;
}

bool all_numeric(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    double v;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return false;
  }
  return true;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::size_t expected_params(const std::string& model) {
  if (model == "SIMPLE_PINHOLE") return 3;
  if (model == "PINHOLE") return 4;
  return 0;
}

}  // namespace

CameraModel SparseModel::camera_model(long image_id) const {
  auto img = images.find(image_id);
  if (img == images.end()) throw Error(ErrorCode::Parse, "unknown image id " + std::to_string(image_id));
  const auto& cam = cameras.at(img->second.camera_id);
  CameraModel m;
  m.fx = cam.fx();
  m.fy = cam.fy();
  m.cx = cam.cx();
  m.cy = cam.cy();
  m.width = cam.width;
  m.height = cam.height;
  const auto& q = img->second.qvec;
  m.R = rotation_from_quaternion(q[0], q[1], q[2], q[3]);
  m.tau = img->second.tvec;
  return m;
}

long SparseModel::image_id(const std::string& name) const {
  for (const auto& [id, img] : images)
    if (img.name == name) return id;
  throw Error(ErrorCode::Parse, "no image named '" + name + "' in sparse model");
}

SparseModel parse_sparse_model(const std::string& dir) {
  const fs::path root(dir);
  SparseModel model;

  const fs::path cam_path = root / "cameras.txt";
  for (const auto& line : read_data_lines(cam_path)) {
    const auto& t = line.tokens;
    if (t.size() < 4) parse_fail(cam_path, line.number, "expected CAM_ID MODEL W H PARAMS[]");
    const auto id = parse_number<long>(t[0], cam_path, line.number);
    ColmapCamera cam;
    cam.model = t[1];
    const auto n_params = expected_params(cam.model);
    if (n_params == 0)
      throw Error(ErrorCode::UnsupportedModel,
                  cam_path.filename().string() + ":" + std::to_string(line.number) +
                      ": unsupported camera model '" + cam.model + "' (only PINHOLE, SIMPLE_PINHOLE)");
    cam.width = parse_number<int>(t[2], cam_path, line.number);
    cam.height = parse_number<int>(t[3], cam_path, line.number);
    if (t.size() != 4 + n_params) parse_fail(cam_path, line.number, "wrong parameter count for " + cam.model);
    for (std::size_t i = 4; i < t.size(); ++i) cam.params.push_back(parse_number<double>(t[i], cam_path, line.number));
    if (!model.cameras.emplace(id, std::move(cam)).second)
      parse_fail(cam_path, line.number, "duplicate camera id");
  }

  const fs::path img_path = root / "images.txt";
  const auto img_lines = read_data_lines(img_path);
  for (std::size_t i = 0; i < img_lines.size(); ++i) {
    const auto& line = img_lines[i];
    const auto& t = line.tokens;
    if (t.size() != 10) parse_fail(img_path, line.number, "expected IMG_ID QW QX QY QZ TX TY TZ CAM_ID NAME");
    const auto id = parse_number<long>(t[0], img_path, line.number);
    ColmapImage img;
    for (int k = 0; k < 4; ++k) img.qvec[k] = parse_number<double>(t[1 + k], img_path, line.number);
    for (int k = 0; k < 3; ++k) img.tvec[k] = parse_number<double>(t[5 + k], img_path, line.number);
    img.camera_id = parse_number<long>(t[8], img_path, line.number);
    img.name = t[9];
    if (std::abs(img.qvec.norm() - 1.0) > 1e-6) parse_fail(img_path, line.number, "quaternion is not unit-norm");
    if (!model.cameras.count(img.camera_id)) parse_fail(img_path, line.number, "unknown camera id");
    // Observation lines hold 3k numeric tokens; a header always holds 10, so
    // the token count tells them apart even around blank lines.
    if (i + 1 < img_lines.size() && img_lines[i + 1].tokens.size() % 3 == 0) {
      const auto& obs = img_lines[++i];
      if (!all_numeric(obs.tokens)) parse_fail(img_path, obs.number, "malformed observation line");
      for (std::size_t k = 0; k < obs.tokens.size(); k += 3) {
        ColmapObservation o;
        o.x = parse_number<double>(obs.tokens[k], img_path, obs.number);
        o.y = parse_number<double>(obs.tokens[k + 1], img_path, obs.number);
        o.point3d_id = parse_number<long>(obs.tokens[k + 2], img_path, obs.number);
        img.observations.push_back(o);
      }
    }
    if (!model.images.emplace(id, std::move(img)).second) parse_fail(img_path, line.number, "duplicate image id");
  }

  const fs::path pts_path = root / "points3D.txt";
  for (const auto& line : read_data_lines(pts_path)) {
    const auto& t = line.tokens;
    if (t.size() < 8 || (t.size() - 8) % 2 != 0)
      parse_fail(pts_path, line.number, "expected P3D_ID X Y Z R G B ERROR (IMG_ID P2D_IDX)...");
    const auto id = parse_number<long>(t[0], pts_path, line.number);
    ColmapPoint3D p;
    for (int k = 0; k < 3; ++k) p.xyz[k] = parse_number<double>(t[1 + k], pts_path, line.number);
    for (int k = 0; k < 3; ++k) p.rgb[k] = parse_number<int>(t[4 + k], pts_path, line.number);
    p.error = parse_number<double>(t[7], pts_path, line.number);
    for (std::size_t k = 8; k < t.size(); k += 2)
      p.track.push_back({parse_number<long>(t[k], pts_path, line.number),
                         parse_number<long>(t[k + 1], pts_path, line.number)});
    if (!model.points3d.emplace(id, std::move(p)).second) parse_fail(pts_path, line.number, "duplicate point id");
  }

  for (const auto& [id, img] : model.images) {
    for (const auto& o : img.observations) {
      if (o.point3d_id != -1 && !model.points3d.count(o.point3d_id))
        throw Error(ErrorCode::Parse, "images.txt: image " + std::to_string(id) +
                                          " observes unknown point " + std::to_string(o.point3d_id));
    }
  }
  return model;
}

void write_sparse_model(const std::string& dir, const SparseModel& model) {
  const fs::path root(dir);
  fs::create_directories(root);
  auto open = [&](const char* name) {
    std::ofstream os(root / name);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + (root / name).string());
    return os;
  };

  {
    auto os = open("cameras.txt");
    os << "# Camera list with one line of data per camera:\n"
       << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
       << "# Number of cameras: " << model.cameras.size() << "\n";
    for (const auto& [id, cam] : model.cameras) {
      os << id << ' ' << cam.model << ' ' << cam.width << ' ' << cam.height;
      for (double p : cam.params) os << ' ' << fmt(p);
      os << '\n';
    }
  }
  {
    auto os = open("images.txt");
    std::size_t n_obs = 0;
    for (const auto& [id, img] : model.images) n_obs += img.observations.size();
    os << "# Image list with two lines of data per image:\n"
       << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
       << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
       << "# Number of images: " << model.images.size()
       << ", mean observations per image: "
       << fmt(model.images.empty() ? 0.0 : double(n_obs) / double(model.images.size())) << "\n";
    for (const auto& [id, img] : model.images) {
      os << id;
      for (int k = 0; k < 4; ++k) os << ' ' << fmt(img.qvec[k]);
      for (int k = 0; k < 3; ++k) os << ' ' << fmt(img.tvec[k]);
      os << ' ' << img.camera_id << ' ' << img.name << '\n';
      for (std::size_t k = 0; k < img.observations.size(); ++k) {
        const auto& o = img.observations[k];
        os << (k ? " " : "") << fmt(o.x) << ' ' << fmt(o.y) << ' ' << o.point3d_id;
      }
      os << '\n';
    }
  }
  {
    auto os = open("points3D.txt");
    std::size_t track_total = 0;
    for (const auto& [id, p] : model.points3d) track_total += p.track.size();
    os << "# 3D point list with one line of data per point:\n"
       << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n"
       << "# Number of points: " << model.points3d.size() << ", mean track length: "
       << fmt(model.points3d.empty() ? 0.0 : double(track_total) / double(model.points3d.size())) << "\n";
    for (const auto& [id, p] : model.points3d) {
      os << id;
      for (int k = 0; k < 3; ++k) os << ' ' << fmt(p.xyz[k]);
      for (int k = 0; k < 3; ++k) os << ' ' << p.rgb[k];
      os << ' ' << fmt(p.error);
      for (const auto& t : p.track) os << ' ' << t.image_id << ' ' << t.point2d_idx;
      os << '\n';
    }
  }
}

AnchorSet build_anchor_set(const SparseModel& model, const std::vector<long>& view_ids) {
  AnchorSet anchors;
  for (long view : view_ids) {
    auto it = model.images.find(view);
    if (it == model.images.end()) throw Error(ErrorCode::Parse, "unknown view id " + std::to_string(view));
    const CameraModel camera = model.camera_model(view);
    auto& obs = anchors.observations[view];
    long dropped = 0;
    std::set<long> seen;
    for (const auto& o : it->second.observations) {
      if (o.point3d_id < 0 || !seen.insert(o.point3d_id).second) continue;
      const Eigen::Vector3d& X = model.points3d.at(o.point3d_id).xyz;
      const Eigen::Vector3d Xc = camera.R * X + camera.tau;
      if (!(Xc.z() > 0.0)) {
        ++dropped;
        continue;
      }
      const Projection p = anchor_depth(camera, X);
      if (!camera.contains(p.pixel.x(), p.pixel.y())) {
        ++dropped;
        continue;
      }
      obs.push_back({o.point3d_id, p.pixel.x(), p.pixel.y(), p.depth});
      anchors.points[o.point3d_id] = X;
    }
    anchors.dropped[view] = dropped;
    if (obs.empty())
      throw Error(ErrorCode::EmptyAnchors, "no anchors survive in view " + std::to_string(view) + " ('" +
                                               it->second.name + "')");
    if (obs.size() >= 2) anchors.depth_ranges[view] = compute_depth_range(anchors, view);
  }
  return anchors;
}

DepthRange compute_depth_range(const AnchorSet& anchors, ViewId view, double lo_pct, double hi_pct,
                               double margin) {
  const auto& obs = anchors.view(view);
  if (obs.size() < 2) throw Error(ErrorCode::InsufficientAnchors, "depth range needs at least 2 anchors");
  if (!(lo_pct >= 0.0 && lo_pct <= hi_pct && hi_pct <= 1.0) || !(margin >= 1.0))
    throw Error(ErrorCode::Parameter, "invalid percentile or margin");
  std::vector<double> depths;
  depths.reserve(obs.size());
  for (const auto& o : obs) depths.push_back(o.depth);
  std::sort(depths.begin(), depths.end());
  const auto n = static_cast<long>(depths.size());
  // Nearest rank: the ceil(p * n)-th smallest value, 1-based.
  auto rank = [n](double p) {
    const long r = static_cast<long>(std::ceil(p * static_cast<double>(n) - 1e-12));
    return std::clamp(r, 1L, n) - 1;
  };
  DepthRange range{depths[static_cast<std::size_t>(rank(lo_pct))] / margin,
                   depths[static_cast<std::size_t>(rank(hi_pct))] * margin};
  if (!(range.min > 0.0) || !(range.min < range.max))
    throw Error(ErrorCode::InsufficientAnchors, "degenerate depth range");
  return range;
}

}  // namespace lffuse
