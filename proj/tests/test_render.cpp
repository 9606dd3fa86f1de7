#include "lffuse/error.hpp"
#include "lffuse/render.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lffuse;

namespace {

Image ramp(int h, int w, double slope = 0.01) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.channels[0](y, x) = 0.1 + slope * x;
  return img;
}

// Gaussian blob centred at (cx, cy).
Image blob(int h, int w, double cx, double cy) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.channels[0](y, x) = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * 1.5 * 1.5));
  return img;
}

double centroid_x(const Plane& p, int row) {
  double num = 0, den = 0;
  for (Eigen::Index x = 0; x < p.cols(); ++x) {
    num += x * p(row, x);
    den += p(row, x);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("render") {
  TEST_CASE("constant disparity lifts to a constant field") {
    RenderConfig cfg;
    const DisparityField f = synthesize_disparity_field(DisparityMap::Constant(6, 7, 0.8), cfg);
    CHECK(f.rows() == 7);
    CHECK(f.cols() == 7);
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) CHECK((f.slice(r, c) == 0.8).all());

    cfg.mode = FieldMode::ForwardReproject;
    const DisparityField g = synthesize_disparity_field(DisparityMap::Constant(6, 7, 0.8), cfg);
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) CHECK((g.slice(r, c) == 0.8).all());
  }

  TEST_CASE("1x1 grid keeps the disparity map") {
    std::mt19937_64 rng(1);
    const DisparityMap d = oracle::random_plane(rng, 5, 6);
    RenderConfig cfg;
    cfg.rows = cfg.cols = 1;
    cfg.mode = FieldMode::ForwardReproject;
    const DisparityField f = synthesize_disparity_field(d, cfg);
    CHECK((f.slice(0, 0) == d).all());
  }

  TEST_CASE("forward reprojection of a step edge") {
    const int H = 3, W = 12, E = 6;
    RenderConfig cfg;
    cfg.rows = 1;
    cfg.cols = 3;
    cfg.mode = FieldMode::ForwardReproject;

    // Near (2 px) on the left: content moves left by 2 in the view at
    // v = (1, 0), leaving a 2 px hole at the edge filled from the far side.
    DisparityMap left_near(H, W);
    for (int x = 0; x < W; ++x) left_near.col(x).setConstant(x < E ? 2.0 : 0.0);
    Plane expect(H, W);
    for (int x = 0; x < W; ++x) expect.col(x).setConstant(x < E - 2 ? 2.0 : 0.0);
    CHECK((synthesize_disparity_field(left_near, cfg).slice(0, 2) == expect).all());

    // Near on the right: it slides over the far side by 2 px and the
    // vacated right border takes the near value.
    DisparityMap right_near(H, W);
    for (int x = 0; x < W; ++x) right_near.col(x).setConstant(x < E ? 0.0 : 2.0);
    for (int x = 0; x < W; ++x) expect.col(x).setConstant(x < E - 2 ? 0.0 : 2.0);
    CHECK((synthesize_disparity_field(right_near, cfg).slice(0, 2) == expect).all());

    // The opposite view mirrors the first case.
    for (int x = 0; x < W; ++x) expect.col(x).setConstant(x < E + 2 ? 2.0 : 0.0);
    CHECK((synthesize_disparity_field(left_near, cfg).slice(0, 0) == expect).all());
  }

  TEST_CASE("backward warp examples") {
    std::mt19937_64 rng(2);
    const Image img = oracle::random_image(rng, 9, 11);
    const WarpedView zero = backward_warp_view(img, Plane::Zero(9, 11), {1, 0});
    CHECK(zero.image == img);
    CHECK((zero.valid == 1).all());

    const WarpedView one = backward_warp_view(img, Plane::Ones(9, 11), {1, 0});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 10; ++x) CHECK(one.image.channels[c](y, x) == img.channels[c](y, x + 1));
    CHECK((one.valid.col(10) == 0).all());
    CHECK((one.valid.leftCols(10) == 1).all());

    const Image r = ramp(4, 10);
    const WarpedView half = backward_warp_view(r, Plane::Constant(4, 10, 0.5), {1, 0});
    for (int x = 0; x < 9; ++x)
      CHECK(half.image.channels[0](2, x) == doctest::Approx(0.1 + 0.01 * (x + 0.5)).epsilon(1e-14));
  }

  TEST_CASE("warps at v and -v compose to the identity on a ramp") {
    const Image r = ramp(6, 30);
    const Plane f = Plane::Constant(6, 30, 1.7);
    const WarpedView fwd = backward_warp_view(r, f, {2, 0});
    const WarpedView back = backward_warp_view(fwd.image, f, {-2, 0});
    // Interior samples never touch the clamped border.
    for (int x = 4; x < 26; ++x) CHECK(std::abs(back.image.channels[0](3, x) - r.channels[0](3, x)) < 1e-6);
  }

  TEST_CASE("render_light_field: central view identity and zero field") {
    std::mt19937_64 rng(3);
    const Image img = oracle::random_image(rng, 10, 12);
    RenderConfig cfg;
    const DisparityField zero = synthesize_disparity_field(DisparityMap::Zero(10, 12), cfg);
    const RenderedLightField lf = render_light_field(img, zero);
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) CHECK(lf.lf.view(r, c) == img);

    const DisparityField f = synthesize_disparity_field(oracle::random_plane(rng, 10, 12, -2, 2), cfg);
    CHECK(render_light_field(img, f).lf.central() == img);
  }

  TEST_CASE("EPI lines have the disparity as slope") {
    const double d = 0.8;
    const Image img = blob(9, 48, 23.3, 4);
    RenderConfig cfg;
    cfg.rows = 1;
    const RenderedLightField lf = render_light_field(img, synthesize_disparity_field(DisparityMap::Constant(9, 48, d), cfg));
    // Least-squares line through (u, centroid) over the seven views.
    double su = 0, sx = 0, suu = 0, sux = 0;
    std::vector<double> xs;
    for (int c = 0; c < 7; ++c) {
      const double u = c - 3;
      const double x = centroid_x(lf.lf.view(0, c).channels[0], 4);
      xs.push_back(x);
      su += u;
      sx += x;
      suu += u * u;
      sux += u * x;
    }
    const double slope = (7 * sux - su * sx) / (7 * suu - su * su);
    const double icept = (sx - slope * su) / 7;
    CHECK(slope == doctest::Approx(kParallaxSign * d).epsilon(1e-3));
    for (int c = 0; c < 7; ++c) CHECK(std::abs(xs[static_cast<std::size_t>(c)] - (icept + slope * (c - 3))) < 0.1);
  }

  TEST_CASE("render config validation") {
    RenderConfig cfg;
    cfg.rows = 4;
    try {
      synthesize_disparity_field(DisparityMap::Zero(2, 2), cfg);
      FAIL("expected an unsupported-grid error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedGrid);
    }
  }
}
