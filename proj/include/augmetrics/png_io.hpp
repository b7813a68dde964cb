#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "augmetrics/error.hpp"
#include "augmetrics/image.hpp"

namespace augmetrics {

namespace detail {

struct PngErrorSink {
  char message[256] = "unknown libpng error";
};

extern "C" inline void png_error_to_sink(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  if (sink != nullptr && msg != nullptr) {
    std::strncpy(sink->message, msg, sizeof(sink->message) - 1);
    sink->message[sizeof(sink->message) - 1] = '\0';
  }
  png_longjmp(png, 1);
}

extern "C" inline void png_ignore_warning(png_structp, png_const_charp) {}

inline double luma_bt601(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace detail

/// Writes raw samples with an explicit libpng color type and bit depth.
/// 16-bit samples are expected big-endian, as stored in the file.
inline void write_png_raw(const std::filesystem::path& path, std::size_t width, std::size_t height, int color_type,
                          int bit_depth, std::span<const unsigned char> bytes) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  require(fp != nullptr, ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");

  detail::PngErrorSink sink;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, detail::png_error_to_sink, detail::png_ignore_warning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoError, "libpng initialisation failed");
  }

  std::vector<png_bytep> rows(height);
  const std::size_t stride = bytes.size() / height;
  for (std::size_t y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(bytes.data() + y * stride);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoError, "writing '" + path.string() + "': " + sink.message);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) fail(ErrorCode::IoError, "closing '" + path.string() + "' failed");
}

/// Saves as 8-bit grayscale, value = round(p * 255).
inline void save_png(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(img.pixels()[i] * 255.0));
  }
  write_png_raw(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 8, bytes);
}

/**
 * Decodes a PNG into a GrayImage.
 *
 * Gray, gray+alpha, RGB, RGBA and palette images at any bit depth are
 * accepted. Colour is reduced with BT.601 luma weights, alpha is dropped,
 * and samples are divided by 255 (8-bit) or 65535 (16-bit).
 */
inline GrayImage load_png(const std::filesystem::path& path) {
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), ErrorCode::FileNotFound, "'" + path.string() + "' not found");

  FILE* fp = std::fopen(path.string().c_str(), "rb");
  require(fp != nullptr, ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");

  unsigned char signature[8] = {};
  if (std::fread(signature, 1, sizeof(signature), fp) != sizeof(signature) || png_sig_cmp(signature, 0, 8) != 0) {
    std::fclose(fp);
    fail(ErrorCode::DecodeError, "'" + path.string() + "' is not a PNG file");
  }

  detail::PngErrorSink sink;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, detail::png_error_to_sink, detail::png_ignore_warning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::DecodeError, "libpng initialisation failed");
  }

  std::vector<unsigned char> data;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::DecodeError, "'" + path.string() + "': " + sink.message);
  }

  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const std::size_t width = png_get_image_width(png, info);
  const std::size_t height = png_get_image_height(png, info);
  const std::size_t channels = png_get_channels(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);

  data.resize(row_bytes * height);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = data.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  auto sample = [&](std::size_t x, std::size_t y, std::size_t c) {
    const unsigned char* p = data.data() + y * row_bytes + (x * channels + c) * bytes_per_sample;
    const unsigned v = bytes_per_sample == 2 ? (static_cast<unsigned>(p[0]) << 8) | p[1] : p[0];
    return static_cast<double>(v) / max_value;
  };

  std::vector<double> pixels(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v = 0.0;
      if (channels <= 2) {
        v = sample(x, y, 0);
      } else {
        v = detail::luma_bt601(sample(x, y, 0), sample(x, y, 1), sample(x, y, 2));
      }
      pixels[y * width + x] = detail::clamp01(v);
    }
  }
  return GrayImage(width, height, std::move(pixels));
}

inline BinaryMask load_mask(const std::filesystem::path& path, double threshold = 0.5) {
  return binarize(load_png(path), threshold);
}

}  // namespace augmetrics
