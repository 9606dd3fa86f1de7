#include "lffuse/colmap.hpp"
#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"
#include "lffuse/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lffuse;
namespace fs = std::filesystem;

namespace {

SceneSpec plane_at_two() {
  SceneSpec spec;
  spec.layers = {LayerSpec{2.0, 7, 0.05, std::nullopt}};
  const CameraModel cam = look_at_camera(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 1), 100.0, 48, 40);
  spec.rigs = {{"a", cam, 3, 3, 0.01}, {"b", look_at_camera({0.1, 0, 0}, {0.1, 0, 1}, 100.0, 48, 40), 3, 3, 0.01}};
  spec.target = {"target", cam, 3, 3, 0.01};
  spec.seed = 3;
  spec.anchor_samples_per_view = 30;
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("synth_oracle") {
  TEST_CASE("plane at depth 2 with f = 100, b = 0.01 has disparity 0.5") {
    const SceneBundle b = generate_scene(plane_at_two());
    const Capture& c = b.sources[0];
    CHECK((c.depth - 2.0).abs().maxCoeff() < 1e-12);
    CHECK((c.disparity - 0.5).abs().maxCoeff() < 1e-12);
    CHECK((c.layer == 0).all());
  }

  TEST_CASE("ground truth disparity is f b / z") {
    const SceneBundle b = generate_scene(make_scene_spec(SceneKind::ThreePlane, 1, 64));
    for (const Capture& c : b.sources) {
      const double fb = c.rig.camera.fx * c.rig.baseline;
      for (long i = 0; i < c.depth.size(); ++i) CHECK(c.disparity.data()[i] == fb / c.depth.data()[i]);
    }
  }

  TEST_CASE("rigs with identical poses render identical light fields") {
    SceneSpec spec = plane_at_two();
    spec.rigs[1] = spec.rigs[0];
    spec.rigs[1].name = "copy";
    const SceneBundle b = generate_scene(spec);
    const auto& va = b.sources[0].lf.views();
    const auto& vb = b.sources[1].lf.views();
    REQUIRE(va.size() == vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
  }

  TEST_CASE("scene generation is deterministic across runs and thread counts") {
    const SceneSpec spec = make_scene_spec(SceneKind::TwoPlane, 9, 48);
    set_thread_count(1);
    const SceneBundle a = generate_scene(spec);
    set_thread_count(4);
    const SceneBundle b = generate_scene(spec);
    set_thread_count(1);
    for (std::size_t s = 0; s < a.sources.size(); ++s) {
      const auto& va = a.sources[s].lf.views();
      const auto& vb = b.sources[s].lf.views();
      for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
      CHECK((a.sources[s].depth == b.sources[s].depth).all());
    }
    CHECK(a.anchors.points.size() == b.anchors.points.size());
    for (const auto& [id, p] : a.anchors.points) CHECK(b.anchors.points.at(id) == p);
  }

  TEST_CASE("anchors survive the COLMAP round trip with exact depths") {
    const SceneBundle b = generate_scene(make_scene_spec(SceneKind::ThreePlane, 2, 64));
    const fs::path dir = fs::temp_directory_path() / "lffuse_synth_fixture";
    fs::remove_all(dir);
    emit_colmap_fixture(b, dir.string());
    const SparseModel m = parse_sparse_model(dir.string());

    CHECK(m.points3d.size() == b.anchors.points.size());
    std::vector<long> views;
    for (const auto& [id, img] : m.images) views.push_back(id);
    const AnchorSet a = build_anchor_set(m, views);
    for (ViewId v : views) {
      const auto& truth = b.anchors.view(v);
      const auto& got = a.view(v);
      REQUIRE(truth.size() == got.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].point_id == truth[i].point_id);
        CHECK(std::abs(got[i].depth - truth[i].depth) <= 1e-9 * truth[i].depth);
      }
    }

    // Poses round-trip losslessly.
    const std::vector<const Capture*> caps{&b.sources[0], &b.sources[1], &b.sources[2], &b.target};
    for (std::size_t i = 0; i < caps.size(); ++i) {
      const CameraModel c = m.camera_model(static_cast<long>(i + 1));
      CHECK((c.R - caps[i]->rig.camera.R).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((c.tau - caps[i]->rig.camera.tau).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(c.fx == caps[i]->rig.camera.fx);
    }

    // The target sits at the origin looking down +Z: identity quaternion.
    const std::string images = slurp(dir / "images.txt");
    CHECK(images.find(" 1 0 0 0 0 0 0 4 target") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("covisible target mask excludes occlusions and edges") {
    const SceneBundle b = generate_scene(make_scene_spec(SceneKind::ThreePlane, 42, 64));
    const Mask m = covisible_target_mask(b, 3);
    const Mask edges = away_from_edges(b.target.layer, 3);
    CHECK(((m == 0) || (edges == 1)).all());
    const double frac = m.cast<double>().mean();
    CHECK(frac > 0.3);
    CHECK(frac < 0.95);
  }

  TEST_CASE("scene validation") {
    SceneSpec spec = plane_at_two();
    spec.layers.push_back(LayerSpec{1.0, 1, 0.05, std::nullopt});
    CHECK_THROWS_AS(generate_scene(spec), Error);
    CHECK(parse_scene_kind("two-plane") == SceneKind::TwoPlane);
    CHECK_THROWS_AS(parse_scene_kind("four-plane"), Error);
  }
}
