#include "lffuse/image_io.hpp"

#include "lffuse/error.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>

namespace lffuse {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path);
  return f;
}

bool host_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char first;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

std::uint32_t byteswap(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

}  // namespace

void write_pfm(const std::string& path, const Plane& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  os << "Pf\n" << map.cols() << ' ' << map.rows() << "\n-1.0\n";
  const bool swap = !host_little_endian();
  for (Eigen::Index y = map.rows() - 1; y >= 0; --y) {
    for (Eigen::Index x = 0; x < map.cols(); ++x) {
      const float f = static_cast<float>(map(y, x));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      if (swap) bits = byteswap(bits);
      os.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  if (!os) throw Error(ErrorCode::Io, "write failed: " + path);
}

Plane read_pfm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string magic;
  long width = 0, height = 0;
  double scale = 0.0;
  if (!(is >> magic) || magic != "Pf") throw Error(ErrorCode::Parse, path + ": not a grayscale PFM");
  if (!(is >> width >> height >> scale) || width <= 0 || height <= 0 || scale == 0.0)
    throw Error(ErrorCode::Parse, path + ": bad PFM header");
  is.get();  // single whitespace byte before the raster
  const bool file_le = scale < 0.0;
  const bool swap = file_le != host_little_endian();
  Plane map(height, width);
  for (long y = height - 1; y >= 0; --y) {
    for (long x = 0; x < width; ++x) {
      std::uint32_t bits;
      if (!is.read(reinterpret_cast<char*>(&bits), 4))
        throw Error(ErrorCode::Parse, path + ": truncated PFM raster");
      if (swap) bits = byteswap(bits);
      float f;
      std::memcpy(&f, &bits, 4);
      map(y, x) = f;
    }
  }
  return map;
}

namespace {

void write_png_rows(png_structp png, png_infop info, const Image& image, int bit_depth) {
  const int C = image.n_channels();
  const int H = image.height();
  const int W = image.width();
  const int bytes = bit_depth / 8;
  png_set_IHDR(png, info, W, H, bit_depth, C == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<png_byte> row(static_cast<std::size_t>(W * C * bytes));
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        const double v = std::clamp(image.channels[c](y, x), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * max_value));
        const std::size_t at = static_cast<std::size_t>((x * C + c) * bytes);
        if (bytes == 2) {
          row[at] = static_cast<png_byte>(q >> 8);
          row[at + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          row[at] = static_cast<png_byte>(q);
        }
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

void read_png_rows(png_structp png, png_infop info, Image& image) {
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  const int W = static_cast<int>(png_get_image_width(png, info));
  const int H = static_cast<int>(png_get_image_height(png, info));
  const int C = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int bytes = depth == 16 ? 2 : 1;
  const double max_value = depth == 16 ? 65535.0 : 255.0;
  image = Image(H, W, C);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (int y = 0; y < H; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        const std::size_t at = static_cast<std::size_t>((x * C + c) * bytes);
        const unsigned q = bytes == 2 ? (unsigned(row[at]) << 8) | row[at + 1] : row[at];
        image.channels[c](y, x) = q / max_value;
      }
    }
  }
  png_read_end(png, nullptr);
}

}  // namespace

void write_png(const std::string& path, const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::Parameter, "PNG bit depth must be 8 or 16");
  const int C = image.n_channels();
  if (C != 1 && C != 3) throw Error(ErrorCode::Parameter, "PNG output needs 1 or 3 channels");
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::Io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG write failed: " + path);
  }
  png_init_io(png, file.get());
  write_png_rows(png, info, image, bit_depth);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw Error(ErrorCode::Parse, path + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::Io, "libpng init failed");
  }
  Image image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Parse, path + ": corrupt PNG");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  read_png_rows(png, info, image);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

Mask read_mask_png(const std::string& path) {
  const Image img = read_png(path);
  Mask mask = Mask::Zero(img.height(), img.width());
  for (const auto& ch : img.channels) mask = (mask != 0 || ch > 0.0).cast<unsigned char>();
  return mask;
}

void write_mask_png(const std::string& path, const Mask& mask) {
  Image img(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()), 1);
  img.channels[0] = mask.cast<double>().min(1.0);
  write_png(path, img, 8);
}

std::string sai_filename(int row, int col) {
  return "r" + std::to_string(row) + "_c" + std::to_string(col) + ".png";
}

void write_light_field(const std::string& dir, const LightField& lf, int bit_depth) {
  fs::create_directories(dir);
  for (int r = 0; r < lf.rows(); ++r)
    for (int c = 0; c < lf.cols(); ++c)
      write_png((fs::path(dir) / sai_filename(r, c)).string(), lf.view(r, c), bit_depth);
}

LightField read_light_field(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir);
  const std::regex pattern(R"(r(\d+)_c(\d+)\.png)");
  int rows = 0, cols = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) {
      rows = std::max(rows, std::stoi(m[1]) + 1);
      cols = std::max(cols, std::stoi(m[2]) + 1);
    }
  }
  if (rows == 0) throw Error(ErrorCode::Io, "no r{row}_c{col}.png views in " + dir);
  std::vector<Image> views;
  views.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const fs::path p = fs::path(dir) / sai_filename(r, c);
      if (!fs::exists(p)) throw Error(ErrorCode::Io, "missing view " + p.string());
      views.push_back(read_png(p.string()));
    }
  }
  return LightField(rows, cols, std::move(views));
}

}  // namespace lffuse
