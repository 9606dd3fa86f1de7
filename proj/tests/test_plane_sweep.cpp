#include "lffuse/error.hpp"
#include "lffuse/plane_sweep.hpp"
#include "lffuse/synth.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lffuse;

namespace {

CostVolume costs_1x1(std::vector<double> c) {
  CostVolume v;
  v.labels = uniform_labels(0.0, 1.0, static_cast<int>(c.size()));
  for (double x : c) v.costs.push_back(Plane::Constant(1, 1, x));
  return v;
}

LightField replicate(const Image& img, int rows, int cols) {
  return LightField(rows, cols, std::vector<Image>(static_cast<std::size_t>(rows * cols), img));
}

struct SinglePlaneCase {
  SceneBundle bundle;
  PlaneSweepConfig cfg;
};

// Fronto-parallel plane at depth 2 seen with f = 100, b = 0.01: constant
// disparity 0.5, which sits 0.7 of a spacing above plane 29 of the sweep.
const SinglePlaneCase& single_plane() {
  static const SinglePlaneCase c = [] {
    SceneSpec spec;
    spec.layers = {LayerSpec{2.0, 11, 0.36, std::nullopt}};
    const CameraModel cam = look_at_camera(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 1), 100.0, 64, 64);
    spec.rigs = {{"rig", cam, 7, 7, 0.01}};
    spec.target = {"target", cam, 7, 7, 0.01};
    spec.seed = 1;
    spec.anchor_samples_per_view = 20;
    SinglePlaneCase out{generate_scene(spec), {}};
    out.cfg.n_planes = 100;
    out.cfg.d_min = 0.2;
    out.cfg.d_max = 1.2;
    out.cfg.temperature_spread = 1.0;
    return out;
  }();
  return c;
}

// Pixels far enough from the border that every view's shifted window stays
// inside the image.
Mask interior(int h, int w, int margin) {
  Mask m = Mask::Zero(h, w);
  m.block(margin, margin, h - 2 * margin, w - 2 * margin).setOnes();
  return m;
}

}  // namespace

TEST_SUITE("dpv_estimation") {
  TEST_CASE("cost_to_probability examples") {
    auto p = cost_to_probability(costs_1x1({0.3, 0.3, 0.3}), 0.5);
    for (int k = 0; k < 3; ++k) CHECK(p.plane(k)(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));

    p = cost_to_probability(costs_1x1({0.0, std::log(2.0)}), 1.0);
    CHECK(p.plane(0)(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-14));
    CHECK(p.plane(1)(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(p.unit() == LabelUnit::SourceDisparity);
    CHECK(p.normalized());

    p = cost_to_probability(costs_1x1({0.0, 1.0}), 1e-3);
    CHECK(p.plane(0)(0, 0) == doctest::Approx(1.0));
    CHECK(p.plane(1)(0, 0) < 1e-300);

    // Large costs stay finite thanks to the max shift.
    p = cost_to_probability(costs_1x1({1e5, 1e5 + 1}), 1.0);
    CHECK(p.plane(0)(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));

    try {
      cost_to_probability(costs_1x1({0, 1}), 0.0);
      FAIL("expected a parameter error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parameter);
    }
  }

  TEST_CASE("softmin is shift invariant and keeps the argmin") {
    std::mt19937_64 rng(21);
    CostVolume cv;
    cv.labels = uniform_labels(0.0, 2.0, 12);
    for (int k = 0; k < 12; ++k) cv.costs.push_back(oracle::random_plane(rng, 9, 11, 0.0, 0.05));
    const Plane shift = oracle::random_plane(rng, 9, 11, -3.0, 3.0);
    CostVolume shifted = cv;
    for (auto& c : shifted.costs) c += shift;
    const Dpv a = cost_to_probability(cv, 0.01);
    const Dpv b = cost_to_probability(shifted, 0.01);
    for (int k = 0; k < 12; ++k) CHECK((a.plane(k) - b.plane(k)).abs().maxCoeff() < 1e-9);

    const auto arg = argmax_plane(a);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 11; ++x) {
        int best = 0;
        for (int k = 1; k < 12; ++k)
          if (cv.costs[k](y, x) < cv.costs[best](y, x)) best = k;
        CHECK(arg(y, x) == best);
      }
  }

  TEST_CASE("constant light field costs nothing") {
    const LightField lf = replicate(Image(16, 20, 3), 5, 5);
    PlaneSweepConfig cfg;
    cfg.n_planes = 8;
    cfg.d_min = -2;
    cfg.d_max = 2;
    const CostVolume cv = plane_sweep_cost(lf, cfg);
    for (const auto& c : cv.costs) CHECK(c.abs().maxCoeff() == 0.0);
  }

  TEST_CASE("identical views match at zero parallax") {
    std::mt19937_64 rng(8);
    const LightField lf = replicate(oracle::random_image(rng, 16, 20), 3, 3);
    PlaneSweepConfig cfg;
    cfg.n_planes = 5;
    cfg.d_min = -1;
    cfg.d_max = 1;
    const CostVolume cv = plane_sweep_cost(lf, cfg);
    CHECK(cv.labels[2] == 0.0);
    CHECK(cv.costs[2].abs().maxCoeff() == 0.0);
    for (int k : {0, 1, 3, 4}) CHECK(cv.costs[k].mean() > 0.0);
  }

  TEST_CASE("even angular grids are rejected") {
    const LightField lf = replicate(Image(8, 8, 1), 2, 3);
    PlaneSweepConfig cfg;
    try {
      plane_sweep_cost(lf, cfg);
      FAIL("expected an unsupported-grid error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedGrid);
    }
  }

  TEST_CASE("single plane: argmin lands on the nearest plane") {
    const auto& c = single_plane();
    const Capture& cap = c.bundle.sources[0];
    const CostVolume cv = plane_sweep_cost(cap.lf, c.cfg);
    const double spacing = cv.labels[1] - cv.labels[0];
    const Mask m = interior(cap.lf.height(), cap.lf.width(), 6);
    long hit = 0, total = 0;
    for (int y = 0; y < cap.lf.height(); ++y)
      for (int x = 0; x < cap.lf.width(); ++x) {
        if (!m(y, x)) continue;
        int best = 0;
        for (int k = 1; k < cv.n_planes(); ++k)
          if (cv.costs[k](y, x) < cv.costs[best](y, x)) best = k;
        const int nearest = static_cast<int>(std::lround((cap.disparity(y, x) - cv.labels[0]) / spacing));
        hit += best == nearest;
        ++total;
      }
    CHECK(100.0 * hit / total > 99.0);
  }

  TEST_CASE("single plane: initial disparity within half a plane spacing") {
    const auto& c = single_plane();
    const Capture& cap = c.bundle.sources[0];
    const Dpv dpv = estimate_dpv(cap.lf, c.cfg);
    const DisparityMap d = estimate_initial_disparity(dpv);
    const double half = 0.5 * (c.cfg.d_max - c.cfg.d_min) / (c.cfg.n_planes - 1);
    const Mask m = interior(cap.lf.height(), cap.lf.width(), 6);
    long ok = 0, total = 0;
    for (int y = 0; y < d.rows(); ++y)
      for (int x = 0; x < d.cols(); ++x) {
        if (!m(y, x)) continue;
        ok += std::abs(d(y, x) - cap.disparity(y, x)) < half;
        ++total;
      }
    CHECK(100.0 * ok / total > 99.0);
  }

  TEST_CASE("estimate_initial_disparity examples") {
    std::vector<Plane> delta(4, Plane::Zero(2, 3));
    delta[2].setOnes();
    const Dpv d(uniform_labels(0.1, 0.4, 4), LabelUnit::SourceDisparity, delta);
    CHECK((estimate_initial_disparity(d) - 0.3).abs().maxCoeff() < 1e-15);

    std::vector<Plane> uni(2, Plane::Constant(2, 3, 0.5));
    const Dpv u(uniform_labels(-1, 1, 2), LabelUnit::SourceDisparity, uni);
    CHECK(estimate_initial_disparity(u).abs().maxCoeff() == 0.0);
  }

  TEST_CASE("calibrate_temperature reads the cost curvature") {
    CostVolume cv;
    cv.labels = uniform_labels(0.0, 1.0, 9);
    for (int k = 0; k < 9; ++k) {
      Plane p(3, 3);
      for (int i = 0; i < 9; ++i) p.data()[i] = (0.5 + i) * 1e-3 * (k - 4) * (k - 4);
      cv.costs.push_back(p);
    }
    // Half second differences are (0.5 + i) * 1e-3; the median is i = 4.
    CHECK(calibrate_temperature(cv, 1.0) == doctest::Approx(4.5e-3).epsilon(1e-12));
    CHECK(calibrate_temperature(cv, 2.0) == doctest::Approx(9e-3).epsilon(1e-12));

    CostVolume flat = cv;
    for (auto& p : flat.costs) p.setConstant(0.2);
    CHECK(calibrate_temperature(flat, 1.0) == 0.0);
  }

  TEST_CASE("config validation") {
    PlaneSweepConfig cfg;
    cfg.n_planes = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.d_min = 2;
    cfg.d_max = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.temperature_spread = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}
