#include "lffuse/error.hpp"
#include "lffuse/fusion.hpp"
#include "lffuse/scvr.hpp"
#include "lffuse/synth.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace lffuse;

namespace {

CameraModel simple_camera(double f, int w, int h) {
  CameraModel c;
  c.fx = c.fy = f;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  c.width = w;
  c.height = h;
  return c;
}

CameraModel random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CameraModel c = simple_camera(90 + 20 * u(rng), 64, 48);
  c.cx += 3 * u(rng);
  c.R = Eigen::AngleAxisd(0.2 * u(rng), Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized()).toRotationMatrix();
  c.tau = Eigen::Vector3d(0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
  return c;
}

WarpedVolume warped_1x1(std::vector<double> probs, std::vector<bool> covered) {
  WarpedVolume w;
  w.labels = uniform_labels(0.2, 0.4, static_cast<int>(probs.size()));
  for (std::size_t k = 0; k < probs.size(); ++k) {
    w.probs.push_back(Plane::Constant(1, 1, covered[k] ? probs[k] : 0.0));
    w.coverage.push_back(Mask::Constant(1, 1, covered[k] ? 1 : 0));
  }
  return w;
}

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("homography: identical cameras give the identity") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const CameraModel c = random_camera(rng);
      for (double d : {0.5, 2.0, 40.0})
        CHECK((plane_homography(c, c, d) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("homography: pure translation closed form") {
    CameraModel tgt = simple_camera(1.0, 10, 10);
    tgt.cx = tgt.cy = 0.0;
    CameraModel src = tgt;
    const double b = 0.3;
    // Source center at (b, 0, 0): Xc = X - C.
    src.tau = Eigen::Vector3d(-b, 0, 0);
    for (double d : {0.5, 2.0, 7.0}) {
      const Eigen::Vector3d p = plane_homography(src, tgt, d) * Eigen::Vector3d(0.4, -0.2, 1.0);
      CHECK(p.x() / p.z() == doctest::Approx(0.4 - b / d).epsilon(1e-14));
      CHECK(p.y() / p.z() == doctest::Approx(-0.2).epsilon(1e-14));
    }
  }

  TEST_CASE("homography: distant planes approach the rotation homography") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const CameraModel s = random_camera(rng);
      const CameraModel t = random_camera(rng);
      Eigen::Matrix3d H = plane_homography(s, t, 1e12);
      Eigen::Matrix3d Hr = s.intrinsics() * s.R * t.R.transpose() * t.intrinsics_inverse();
      H /= H(2, 2);
      Hr /= Hr(2, 2);
      CHECK((H - Hr).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("homography: maps plane points between views") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const CameraModel s = random_camera(rng);
      const CameraModel t = random_camera(rng);
      const double d = 2 + u(rng);
      const Eigen::Vector2d px(60 * u(rng), 40 * u(rng));
      const Eigen::Vector3d X = back_project(t, px, d);
      const Eigen::Vector3d h = plane_homography(s, t, d) * Eigen::Vector3d(px.x(), px.y(), 1.0);
      const Projection p = anchor_depth(s, X);
      CHECK((h.head<2>() / h.z() - p.pixel).norm() < 1e-9);
    }
  }

  TEST_CASE("homography: composition through an intermediate view") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const CameraModel a = random_camera(rng), b = random_camera(rng), c = random_camera(rng);
      const Eigen::Vector3d n = Eigen::Vector3d(0.2 * u(rng), 0.2 * u(rng), 1.0).normalized();
      const double da = 3.0;
      // Same world plane seen from b's center.
      const double db = n.dot(a.center()) + da - n.dot(b.center());
      const Eigen::Matrix3d direct = plane_induced_homography(c, a, n, da);
      const Eigen::Matrix3d chained = plane_induced_homography(c, b, n, db) * plane_induced_homography(b, a, n, da);
      CHECK((direct / direct(2, 2) - chained / chained(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("homography rejects non-positive depth") {
    const CameraModel c = simple_camera(1, 4, 4);
    CHECK_THROWS_AS(plane_homography(c, c, 0.0), Error);
  }

  TEST_CASE("warp_volume: identity cameras reproduce the input") {
    std::mt19937_64 rng(5);
    const CameraModel cam = simple_camera(50, 12, 10);
    std::vector<Plane> planes;
    for (int k = 0; k < 5; ++k) planes.push_back(oracle::random_plane(rng, 10, 12));
    const Eigen::VectorXd labels = uniform_labels(0.2, 0.6, 5);
    const Dpv src = normalize_dpv(Dpv(labels, LabelUnit::InverseDepth, planes)).volume;
    const WarpedVolume w = warp_volume(src, cam, cam, labels);
    for (int k = 0; k < 5; ++k) {
      CHECK((w.probs[k] - src.plane(k)).abs().maxCoeff() < 1e-12);
      CHECK((w.coverage[k] == 1).all());
    }
  }

  TEST_CASE("warp_volume: integer translation shifts each plane") {
    std::mt19937_64 rng(6);
    const CameraModel tgt = simple_camera(40, 16, 8);
    CameraModel src = tgt;
    // Source center at x = +0.1; at depth 2 the shift is -f b / d = -2 px.
    src.tau = Eigen::Vector3d(-0.1, 0, 0);
    Eigen::VectorXd labels(3);
    labels << 0.25, 0.5, 0.75;
    std::vector<Plane> planes;
    for (int k = 0; k < 3; ++k) planes.push_back(oracle::random_plane(rng, 8, 16));
    const Dpv s(labels, LabelUnit::InverseDepth, planes);
    const WarpedVolume w = warp_volume(s, src, tgt, labels);
    const int shift = 2;  // plane 1, inverse depth 0.5
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 16; ++x) {
        if (x < shift) {
          CHECK(w.coverage[1](y, x) == 0);
          CHECK(w.probs[1](y, x) == 0.0);
        } else {
          CHECK(w.coverage[1](y, x) == 1);
          CHECK(w.probs[1](y, x) == doctest::Approx(planes[1](y, x - shift)).epsilon(1e-12));
        }
      }
  }

  TEST_CASE("warp_volume: planes outside the source span are uncovered") {
    const CameraModel cam = simple_camera(30, 6, 6);
    Eigen::VectorXd src_labels(3), tgt_labels(3);
    src_labels << 0.4, 0.5, 0.6;
    tgt_labels << 0.1, 0.5, 0.9;
    std::vector<Plane> planes(3, Plane::Constant(6, 6, 1.0 / 3));
    const Dpv s(src_labels, LabelUnit::InverseDepth, planes);
    const WarpedVolume w = warp_volume(s, cam, cam, tgt_labels);
    CHECK((w.coverage[0] == 0).all());
    CHECK((w.coverage[1] == 1).all());
    CHECK((w.coverage[2] == 0).all());

    const Dpv wrong(src_labels, LabelUnit::WorldDepth, planes);
    try {
      warp_volume(wrong, cam, cam, tgt_labels);
      FAIL("expected a frame error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Frame);
    }
  }

  TEST_CASE("fusion_weights examples") {
    const CameraModel tgt = simple_camera(100, 8, 8);
    auto one = fusion_weights({tgt}, tgt, 1.0, 0.2);
    CHECK(one.w_pos[0] == 1.0);
    CHECK(one.w_dir[0] == 1.0);

    CameraModel left = tgt, right = tgt;
    left.tau = Eigen::Vector3d(0.5, 0, 0);
    right.tau = Eigen::Vector3d(-0.5, 0, 0);
    auto sym = fusion_weights({left, right}, tgt, 1.0, 0.2);
    CHECK(sym.w_pos[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sym.w_pos[1] == doctest::Approx(0.5).epsilon(1e-15));

    CameraModel far = tgt;
    far.tau = Eigen::Vector3d(0, -1, 0);
    auto w = fusion_weights({tgt, far}, tgt, 1.0, 0.2);
    CHECK(w.w_pos[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(w.w_pos[0] == doctest::Approx(0.731).epsilon(1e-3));
    CHECK(w.w_pos[1] == doctest::Approx(0.269).epsilon(2e-3));
    CHECK(w.w_dir[0] == doctest::Approx(0.5));
    CHECK(std::accumulate(w.w_pos.begin(), w.w_pos.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(fusion_weights({tgt}, tgt, 0.0, 0.2), Error);
  }

  TEST_CASE("default_sigma_pos") {
    const CameraModel a = simple_camera(100, 8, 8);
    CameraModel b = a, c = a;
    b.tau = Eigen::Vector3d(-3, 0, 0);
    c.tau = Eigen::Vector3d(0, -4, 0);
    CHECK(default_sigma_pos({a}) == 1.0);
    CHECK(default_sigma_pos({a, b, c}) == doctest::Approx((3.0 + 4.0 + 5.0) / 3.0));
  }

  TEST_CASE("fuse_volumes examples") {
    FusionWeights unit{{1.0}, {1.0}, 1.0, 0.2};
    const WarpedVolume w = warped_1x1({0.2, 0.3, 0.5}, {true, true, true});
    const FusionResult one = fuse_volumes({w}, unit);
    for (int k = 0; k < 3; ++k) CHECK(one.volume.plane(k)(0, 0) == doctest::Approx(w.probs[k](0, 0)));

    FusionWeights half{{0.5, 0.5}, {0.5, 0.5}, 1.0, 0.2};
    const FusionResult two =
        fuse_volumes({warped_1x1({0.4, 0.6}, {true, false}), warped_1x1({0.8, 0.2}, {true, false})}, half);
    CHECK(two.unnormalized[0](0, 0) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(two.unnormalized[1](0, 0) == 0.0);
    CHECK(two.n_rays[0](0, 0) == 2);
    CHECK(two.n_rays[1](0, 0) == 0);
    CHECK(two.volume.plane(0)(0, 0) == doctest::Approx(1.0));

    const FusionResult renorm =
        fuse_volumes({warped_1x1({0.4, 0.6}, {true, true}), warped_1x1({0.8, 0.2}, {true, false})}, half, true);
    CHECK(renorm.unnormalized[0](0, 0) == doctest::Approx(0.6));
    CHECK(renorm.unnormalized[1](0, 0) == doctest::Approx(0.6));
  }

  TEST_CASE("fuse_volumes is permutation invariant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<WarpedVolume> vols;
    FusionWeights w;
    for (int s = 0; s < 4; ++s) {
      WarpedVolume v;
      v.labels = uniform_labels(0.2, 0.5, 6);
      for (int k = 0; k < 6; ++k) {
        Mask cov(5, 7);
        Plane p = oracle::random_plane(rng, 5, 7);
        for (long i = 0; i < cov.size(); ++i) {
          cov.data()[i] = u(rng) < 0.7;
          if (!cov.data()[i]) p.data()[i] = 0.0;
        }
        v.probs.push_back(p);
        v.coverage.push_back(cov);
      }
      vols.push_back(v);
      w.w_pos.push_back(u(rng));
      w.w_dir.push_back(u(rng));
    }
    const FusionResult ref = fuse_volumes(vols, w);
    std::vector<int> order{0, 1, 2, 3};
    while (std::next_permutation(order.begin(), order.end())) {
      std::vector<WarpedVolume> pv;
      FusionWeights pw;
      for (int i : order) {
        pv.push_back(vols[static_cast<std::size_t>(i)]);
        pw.w_pos.push_back(w.w_pos[static_cast<std::size_t>(i)]);
        pw.w_dir.push_back(w.w_dir[static_cast<std::size_t>(i)]);
      }
      const FusionResult r = fuse_volumes(pv, pw);
      for (int k = 0; k < 6; ++k) CHECK((r.volume.plane(k) - ref.volume.plane(k)).abs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("fuse_volumes rejects mismatched labels") {
    FusionWeights w{{0.5, 0.5}, {0.5, 0.5}, 1.0, 0.2};
    WarpedVolume a = warped_1x1({0.5, 0.5}, {true, true});
    WarpedVolume b = a;
    b.labels[1] = 9.0;
    try {
      fuse_volumes({a, b}, w);
      FAIL("expected a fusion error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Fusion);
    }
  }

  TEST_CASE("fused argmax on noiseless volumes finds the nearest plane") {
    // Each source volume is a unit-width Gaussian over planes centred on the
    // exact true inverse depth; no matching noise is involved. A hard delta
    // would round once in the source frame and again in the warp. The layers are
    // fronto-parallel, so each has one constant target label; 75 planes keep
    // all three within 0.13 of a plane centre (100 puts the background at
    // 10.53, an almost exact tie).
    const SceneBundle b = generate_scene(make_scene_spec(SceneKind::ThreePlane, 42, 96));
    const CameraModel& tgt = b.target.rig.camera;
    const Eigen::VectorXd labels =
        shared_inverse_depth_labels(compute_depth_range(b.anchors, b.target_view_id()), 75);
    const double spacing = labels[1] - labels[0];
    std::vector<WarpedVolume> warped;
    std::vector<CameraModel> cams;
    for (const Capture& cap : b.sources) {
      std::vector<Plane> planes(static_cast<std::size_t>(labels.size()),
                                Plane::Zero(cap.depth.rows(), cap.depth.cols()));
      for (int y = 0; y < cap.depth.rows(); ++y)
        for (int x = 0; x < cap.depth.cols(); ++x) {
          const double k = (1.0 / cap.depth(y, x) - labels[0]) / spacing;
          for (Eigen::Index j = 0; j < labels.size(); ++j)
            planes[static_cast<std::size_t>(j)](y, x) = std::exp(-0.5 * (j - k) * (j - k));
        }
      const Dpv v(labels, LabelUnit::InverseDepth, planes);
      warped.push_back(warp_volume(v, cap.rig.camera, tgt, labels));
      cams.push_back(cap.rig.camera);
    }
    const FusionResult fused = fuse_volumes(warped, fusion_weights(cams, tgt, default_sigma_pos(cams), 0.2));
    const auto arg = argmax_plane(fused.volume);
    const Mask mask = covisible_target_mask(b, 3);
    long hit = 0, total = 0;
    for (int y = 0; y < arg.rows(); ++y)
      for (int x = 0; x < arg.cols(); ++x) {
        if (!mask(y, x)) continue;
        const long nearest = std::lround((1.0 / b.target.depth(y, x) - labels[0]) / spacing);
        hit += arg(y, x) == nearest;
        ++total;
      }
    REQUIRE(total > 1000);
    CHECK(100.0 * hit / total > 98.0);
  }
}
