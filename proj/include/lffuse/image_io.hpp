#pragma once

#include "lffuse/image.hpp"

#include <string>

namespace lffuse {

/// Grayscale PFM ("Pf"), little-endian, rows stored bottom-up.
void write_pfm(const std::string& path, const Plane& map);
Plane read_pfm(const std::string& path);

/// PNG with 1 (gray) or 3 (RGB) channels. Samples are clamped to [0, 1] and
/// written at the requested bit depth (8 or 16). Alpha is dropped on read.
void write_png(const std::string& path, const Image& image, int bit_depth = 16);
Image read_png(const std::string& path);

/// Nonzero pixels of a PNG become 1.
Mask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const Mask& mask);

/// Directory of "r{row}_c{col}.png" sub-aperture images.
void write_light_field(const std::string& dir, const LightField& lf, int bit_depth = 16);
LightField read_light_field(const std::string& dir);

std::string sai_filename(int row, int col);

}  // namespace lffuse
