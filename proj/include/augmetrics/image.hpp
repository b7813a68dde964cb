#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "augmetrics/error.hpp"

namespace augmetrics {

/**
 * Single-channel raster with intensities in [0, 1], stored row-major:
 * pixel (x, y) lives at index y * width + x.
 *
 * The constructor enforces the invariants, so every GrayImage in flight is
 * known to be nonempty, correctly sized and in range.
 */
class GrayImage {
 public:
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    require(width_ >= 1 && height_ >= 1, ErrorCode::InvalidImage, "image dimensions must be at least 1x1");
    require(pixels_.size() == width_ * height_, ErrorCode::InvalidImage,
            "pixel count " + std::to_string(pixels_.size()) + " does not match " + std::to_string(width_) + "x" +
                std::to_string(height_));
    for (double p : pixels_) {
      require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidImage, "pixel value outside [0,1]");
    }
  }

  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : GrayImage(width, height, std::vector<double>(width * height, fill)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

  const std::vector<double>& pixels() const noexcept { return pixels_; }

  bool same_shape(const GrayImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> pixels_;
};

/// Lung-region mask; true marks pixels inside the region.
class BinaryMask {
 public:
  BinaryMask(std::size_t width, std::size_t height, std::vector<bool> bits)
      : width_(width), height_(height), bits_(std::move(bits)) {
    require(width_ >= 1 && height_ >= 1, ErrorCode::InvalidImage, "mask dimensions must be at least 1x1");
    require(bits_.size() == width_ * height_, ErrorCode::InvalidImage, "mask bit count does not match dimensions");
  }

  BinaryMask(std::size_t width, std::size_t height, bool fill = false)
      : BinaryMask(width, height, std::vector<bool>(width * height, fill)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x]; }
  void set(std::size_t x, std::size_t y, bool value = true) { bits_[y * width_ + x] = value; }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<bool> bits_;
};

/// Thresholds a grayscale rendering of a mask: p >= threshold is inside.
inline BinaryMask binarize(const GrayImage& img, double threshold = 0.5) {
  std::vector<bool> bits(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) bits[i] = img.pixels()[i] >= threshold;
  return BinaryMask(img.width(), img.height(), std::move(bits));
}

struct Rect {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Minimal axis-aligned rectangle containing every true bit.
inline Rect mask_bbox(const BinaryMask& mask) {
  std::size_t min_x = mask.width(), min_y = mask.height(), max_x = 0, max_y = 0;
  bool any = false;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      any = true;
      min_x = std::min(min_x, x);
      min_y = std::min(min_y, y);
      max_x = std::max(max_x, x);
      max_y = std::max(max_y, y);
    }
  }
  require(any, ErrorCode::EmptyMask, "mask has no true bits");
  return Rect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
  require(r.w >= 1 && r.h >= 1 && r.x0 + r.w <= img.width() && r.y0 + r.h <= img.height(), ErrorCode::OutOfBounds,
          "crop rectangle exceeds image bounds");
  std::vector<double> out;
  out.reserve(r.w * r.h);
  for (std::size_t y = r.y0; y < r.y0 + r.h; ++y) {
    const auto row = img.pixels().begin() + static_cast<std::ptrdiff_t>(y * img.width() + r.x0);
    out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(r.w));
  }
  return GrayImage(r.w, r.h, std::move(out));
}

namespace detail {

/// Bilinear sample at continuous pixel coordinates with edge replication
/// outside the frame. Integer coordinates return the stored pixel exactly.
inline double sample_bilinear(const GrayImage& img, double sx, double sy) {
  const double max_x = static_cast<double>(img.width() - 1);
  const double max_y = static_cast<double>(img.height() - 1);
  sx = std::clamp(sx, 0.0, max_x);
  sy = std::clamp(sy, 0.0, max_y);
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const auto x0 = static_cast<std::size_t>(fx);
  const auto y0 = static_cast<std::size_t>(fy);
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const double tx = sx - fx;
  const double ty = sy - fy;
  const double top = img.at(x0, y0) + (img.at(x1, y0) - img.at(x0, y0)) * tx;
  const double bottom = img.at(x0, y1) + (img.at(x1, y1) - img.at(x0, y1)) * tx;
  return top + (bottom - top) * ty;
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace detail

/// Bilinear resize with half-pixel-center mapping:
/// src = (dst + 0.5) * src_extent / dst_extent - 0.5.
inline GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height) {
  require(width >= 1 && height >= 1, ErrorCode::InvalidArgument, "target dimensions must be at least 1x1");
  const double scale_x = static_cast<double>(img.width()) / static_cast<double>(width);
  const double scale_y = static_cast<double>(img.height()) / static_cast<double>(height);
  std::vector<double> out(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * scale_y - 0.5;
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * scale_x - 0.5;
      out[y * width + x] = detail::clamp01(detail::sample_bilinear(img, sx, sy));
    }
  }
  return GrayImage(width, height, std::move(out));
}

inline constexpr std::size_t kDefaultTargetSize = 128;

/// Crop to the mask's bounding box, then resize to target x target.
inline GrayImage preprocess(const GrayImage& img, const BinaryMask& mask, std::size_t target = kDefaultTargetSize) {
  require(mask.width() == img.width() && mask.height() == img.height(), ErrorCode::DimensionMismatch,
          "mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) + ", image is " +
              std::to_string(img.width()) + "x" + std::to_string(img.height()));
  return resize_bilinear(crop(img, mask_bbox(mask)), target, target);
}

}  // namespace augmetrics
