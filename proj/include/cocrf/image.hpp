#pragma once

#include <png.h>

#include <array>
#include <cctype>
#include <csetjmp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "cocrf/error.hpp"

namespace cocrf {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  bool empty() const noexcept { return width <= 0 || height <= 0; }

  std::uint8_t* at(int row, int col) { return &data[(static_cast<std::size_t>(row) * width + col) * 3]; }
  const std::uint8_t* at(int row, int col) const { return &data[(static_cast<std::size_t>(row) * width + col) * 3]; }

  void set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* px = at(row, col);
    px[0] = r;
    px[1] = g;
    px[2] = b;
  }
};

/// Single-channel integer raster (label maps, ground-truth masks).
struct GrayRaster {
  int width = 0;
  int height = 0;
  std::vector<int> values;
};

// ---------------------------------------------------------------------------
// Color conversion (sRGB, D65 white point).

struct Xyz {
  double x, y, z;
};

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline Xyz rgb_to_xyz(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double b = srgb_to_linear(b8 / 255.0);
  return {0.4124564 * r + 0.3575761 * g + 0.1804375 * b,
          0.2126729 * r + 0.7151522 * g + 0.0721750 * b,
          0.0193339 * r + 0.1191920 * g + 0.9503041 * b};
}

inline constexpr Xyz kWhiteD65{0.95047, 1.0, 1.08883};

namespace detail {
inline double lab_f(double t) {
  constexpr double eps = 216.0 / 24389.0;
  constexpr double kappa = 24389.0 / 27.0;
  return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}
}  // namespace detail

inline std::array<double, 3> rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const Xyz c = rgb_to_xyz(r, g, b);
  const double fx = detail::lab_f(c.x / kWhiteD65.x);
  const double fy = detail::lab_f(c.y / kWhiteD65.y);
  const double fz = detail::lab_f(c.z / kWhiteD65.z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline std::array<double, 3> rgb_to_luv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  constexpr double eps = 216.0 / 24389.0;
  constexpr double kappa = 24389.0 / 27.0;
  const Xyz c = rgb_to_xyz(r, g, b);
  const double yr = c.y / kWhiteD65.y;
  const double L = yr > eps ? 116.0 * std::cbrt(yr) - 16.0 : kappa * yr;
  const double denom = c.x + 15.0 * c.y + 3.0 * c.z;
  if (denom <= 0.0) return {L, 0.0, 0.0};
  const double wd = kWhiteD65.x + 15.0 * kWhiteD65.y + 3.0 * kWhiteD65.z;
  const double up = 4.0 * c.x / denom, vp = 9.0 * c.y / denom;
  const double ur = 4.0 * kWhiteD65.x / wd, vr = 9.0 * kWhiteD65.y / wd;
  return {L, 13.0 * L * (up - ur), 13.0 * L * (vp - vr)};
}

// ---------------------------------------------------------------------------
// File I/O. PNG goes through libpng; PPM (P6, maxval 255) is read directly.

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(Errc::Io, "cannot open " + path);
  return f;
}

inline void png_warning_handler(png_structp, png_const_charp) {}

struct PngRead {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // rows packed, big-endian 16-bit samples
};

inline PngRead read_png_raw(const std::string& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
  if (!png) throw Error(Errc::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  PngRead out;
  std::vector<png_bytep> rows;
  // libpng reports errors by longjmp back here; only C frames are skipped.
  if (setjmp(png_jmpbuf(png))) throw Error(Errc::Io, path + ": corrupt PNG");
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth < 8) depth = 8;
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int r = 0; r < out.height; ++r) rows[r] = out.bytes.data() + rowbytes * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return out;
}

inline void write_png_raw(const std::string& path, int width, int height, int color_type, int bit_depth,
                          const std::vector<std::uint8_t>& bytes) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
  if (!png) throw Error(Errc::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (setjmp(png_jmpbuf(png))) throw Error(Errc::Io, path + ": PNG encoding failed");
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = bytes.size() / static_cast<std::size_t>(height);
  for (int r = 0; r < height; ++r) png_write_row(png, bytes.data() + rowbytes * r);
  png_write_end(png, nullptr);
}

inline RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  auto token = [&in]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t += c;
    }
    return t;
  };
  if (token() != "P6") throw Error(Errc::Io, path + ": only binary P6 PPM is supported");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(Errc::Io, path + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(Errc::Io, path + ": unsupported PPM dimensions or maxval");
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) throw Error(Errc::Io, path + ": truncated PPM");
  return img;
}

inline bool has_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

inline bool has_ppm_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char sig[2] = {};
  in.read(sig, 2);
  return in.gcount() == 2 && sig[0] == 'P' && sig[1] == '6';
}

}  // namespace detail

inline bool is_supported_image(const std::string& path) {
  return detail::has_png_signature(path) || detail::has_ppm_signature(path);
}

/// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or a P6 PPM.
inline RgbImage read_image(const std::string& path) {
  if (detail::has_ppm_signature(path)) return detail::read_ppm(path);
  if (!detail::has_png_signature(path)) throw Error(Errc::Io, path + ": not a PNG or PPM image");
  auto raw = detail::read_png_raw(path);
  RgbImage img(raw.width, raw.height);
  const int bps = raw.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = raw.bytes.size() / raw.height;
  for (int r = 0; r < raw.height; ++r) {
    for (int c = 0; c < raw.width; ++c) {
      const std::uint8_t* px = raw.bytes.data() + rowbytes * r + static_cast<std::size_t>(c) * raw.channels * bps;
      auto sample = [&](int ch) { return px[ch * bps]; };  // high byte for 16-bit
      if (raw.channels >= 3)
        img.set(r, c, sample(0), sample(1), sample(2));
      else
        img.set(r, c, sample(0), sample(0), sample(0));
    }
  }
  return img;
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

inline void write_png(const std::string& path, const RgbImage& img) {
  detail::write_png_raw(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8, img.data);
}

/// Writes values as 16-bit grayscale; values must lie in 0..65535.
inline void write_png_gray16(const std::string& path, const GrayRaster& raster) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(raster.width) * raster.height * 2);
  for (std::size_t i = 0; i < raster.values.size(); ++i) {
    const int v = raster.values[i];
    if (v < 0 || v > 65535) throw Error(Errc::InvalidArgument, "value does not fit in 16 bits");
    bytes[2 * i] = static_cast<std::uint8_t>(v >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
  }
  detail::write_png_raw(path, raster.width, raster.height, PNG_COLOR_TYPE_GRAY, 16, bytes);
}

/// Reads a single-channel 8- or 16-bit PNG into integer values (the first
/// channel is used for multi-channel files).
inline GrayRaster read_png_gray(const std::string& path) {
  auto raw = detail::read_png_raw(path);
  GrayRaster out{raw.width, raw.height, std::vector<int>(static_cast<std::size_t>(raw.width) * raw.height)};
  const int bps = raw.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = raw.bytes.size() / raw.height;
  for (int r = 0; r < raw.height; ++r) {
    for (int c = 0; c < raw.width; ++c) {
      const std::uint8_t* px = raw.bytes.data() + rowbytes * r + static_cast<std::size_t>(c) * raw.channels * bps;
      out.values[static_cast<std::size_t>(r) * raw.width + c] = bps == 2 ? (px[0] << 8) | px[1] : px[0];
    }
  }
  return out;
}

}  // namespace cocrf
