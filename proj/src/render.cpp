#include "lffuse/render.hpp"

#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"

#include <cmath>
#include <limits>

namespace lffuse {

void RenderConfig::validate() const {
  if (rows < 1 || cols < 1 || rows % 2 == 0 || cols % 2 == 0)
    throw Error(ErrorCode::UnsupportedGrid, "render grid must be odd and >= 1 in both directions");
  if (!std::isfinite(pixels_per_unit)) throw Error(ErrorCode::Parameter, "pixels_per_unit must be finite");
}

namespace {

Plane forward_reproject(const Plane& parallax, AngularOffset v) {
  const auto H = parallax.rows();
  const auto W = parallax.cols();
  const double lowest = -std::numeric_limits<double>::infinity();
  Plane out = Plane::Constant(H, W, lowest);
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      const double d = parallax(y, x);
      const auto tx = static_cast<Eigen::Index>(std::lround(x + kParallaxSign * d * v.du));
      const auto ty = static_cast<Eigen::Index>(std::lround(y + kParallaxSign * d * v.dv));
      if (tx < 0 || ty < 0 || tx >= W || ty >= H) continue;
      if (d > out(ty, tx)) out(ty, tx) = d;
    }
  }
  // Holes: walk both ways along the offset direction and take the farther
  // (smaller-parallax) of the two nearest splatted neighbours.
  const double norm = std::max(std::abs(v.du), std::abs(v.dv));
  const double sx = norm > 0 ? v.du / norm : 0.0;
  const double sy = norm > 0 ? v.dv / norm : 0.0;
  Plane filled = out;
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      if (out(y, x) != lowest) continue;
      double best = std::numeric_limits<double>::infinity();
      bool found = false;
      for (int dir : {-1, 1}) {
        for (int step = 1; norm > 0; ++step) {
          const auto cx = static_cast<Eigen::Index>(std::lround(x + dir * step * sx));
          const auto cy = static_cast<Eigen::Index>(std::lround(y + dir * step * sy));
          if (cx < 0 || cy < 0 || cx >= W || cy >= H) break;
          if (out(cy, cx) != lowest) {
            best = std::min(best, out(cy, cx));
            found = true;
            break;
          }
        }
      }
      filled(y, x) = found ? best : parallax(y, x);
    }
  }
  return filled;
}

}  // namespace

DisparityField synthesize_disparity_field(const DisparityMap& disparity, const RenderConfig& cfg) {
  cfg.validate();
  const Plane parallax = disparity * cfg.pixels_per_unit;
  std::vector<Plane> slices(static_cast<std::size_t>(cfg.rows * cfg.cols));
  parallel_for(cfg.rows * cfg.cols, [&](std::ptrdiff_t i) {
    const int r = static_cast<int>(i) / cfg.cols;
    const int c = static_cast<int>(i) % cfg.cols;
    const AngularOffset v{static_cast<double>(c - (cfg.cols - 1) / 2), static_cast<double>(r - (cfg.rows - 1) / 2)};
    if (cfg.mode == FieldMode::ConstantLift || (v.du == 0.0 && v.dv == 0.0))
      slices[static_cast<std::size_t>(i)] = parallax;
    else
      slices[static_cast<std::size_t>(i)] = forward_reproject(parallax, v);
  });
  return DisparityField(cfg.rows, cfg.cols, std::move(slices));
}

WarpedView backward_warp_view(const Image& image, const Plane& field_slice, AngularOffset v) {
  const int H = image.height();
  const int W = image.width();
  if (field_slice.rows() != H || field_slice.cols() != W)
    throw Error(ErrorCode::Precondition, "disparity field slice does not match the image");
  WarpedView out{Image(H, W, image.n_channels()), Mask::Ones(H, W)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double f = field_slice(y, x);
      const double sx = x - kParallaxSign * f * v.du;
      const double sy = y - kParallaxSign * f * v.dv;
      bool inside = true;
      for (int c = 0; c < image.n_channels(); ++c)
        out.image.channels[c](y, x) = sample_bilinear_clamped(image.channels[c], sx, sy, &inside);
      out.valid(y, x) = inside ? 1 : 0;
    }
  }
  return out;
}

RenderedLightField render_light_field(const Image& image, const DisparityField& field) {
  const int M = field.rows();
  const int N = field.cols();
  if (M % 2 == 0 || N % 2 == 0) throw Error(ErrorCode::UnsupportedGrid, "render grid must be odd");
  std::vector<Image> views(static_cast<std::size_t>(M * N));
  std::vector<Mask> valid(static_cast<std::size_t>(M * N));
  parallel_for(M * N, [&](std::ptrdiff_t i) {
    const int r = static_cast<int>(i) / N;
    const int c = static_cast<int>(i) % N;
    if (r == (M - 1) / 2 && c == (N - 1) / 2) {
      views[static_cast<std::size_t>(i)] = image;
      valid[static_cast<std::size_t>(i)] = Mask::Ones(image.height(), image.width());
      return;
    }
    const AngularOffset v{static_cast<double>(c - (N - 1) / 2), static_cast<double>(r - (M - 1) / 2)};
    auto warped = backward_warp_view(image, field.slice(r, c), v);
    views[static_cast<std::size_t>(i)] = std::move(warped.image);
    valid[static_cast<std::size_t>(i)] = std::move(warped.valid);
  });
  return {LightField(M, N, std::move(views)), std::move(valid)};
}

}  // namespace lffuse
