#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "augmetrics/error.hpp"
#include "augmetrics/image.hpp"

namespace augmetrics {

/// SSIM stabilisation constants and sliding-window geometry.
/// Defaults: k1 = 0.01, k2 = 0.03, L = 1 (images in [0,1]), 7x7 window, stride 1.
struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  std::size_t window = 7;
  std::size_t stride = 1;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }

  void validate() const {
    require(k1 > 0.0 && k2 > 0.0, ErrorCode::InvalidArgument, "SSIM constants k1, k2 must be positive");
    require(dynamic_range > 0.0, ErrorCode::InvalidArgument, "SSIM dynamic range must be positive");
    require(window >= 2, ErrorCode::InvalidArgument, "SSIM window must be at least 2");
    require(stride >= 1, ErrorCode::InvalidArgument, "SSIM stride must be at least 1");
    require(c1() > 0.0 && c2() > 0.0, ErrorCode::InvalidArgument, "SSIM constants underflow to zero");
  }
};

namespace detail {

inline void require_same_shape(const GrayImage& x, const GrayImage& y) {
  require(x.same_shape(y), ErrorCode::DimensionMismatch,
          std::to_string(x.width()) + "x" + std::to_string(x.height()) + " vs " + std::to_string(y.width()) + "x" +
              std::to_string(y.height()));
}

inline double mean_squared_error(const GrayImage& x, const GrayImage& y) {
  double sum = 0.0;
  const auto& a = x.pixels();
  const auto& b = y.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

inline double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double p : v) sum += p;
  return sum / static_cast<double>(v.size());
}

inline double ssim_from_moments(double mu_x, double mu_y, double var_x, double var_y, double cov_xy,
                                const SsimParams& p) {
  const double c1 = p.c1();
  const double c2 = p.c2();
  return ((2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)) /
         ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
}

}  // namespace detail

inline double rmse(const GrayImage& x, const GrayImage& y) {
  detail::require_same_shape(x, y);
  return std::sqrt(detail::mean_squared_error(x, y));
}

/// Signal-to-reconstruction error ratio in dB with x as the signal:
/// 10 log10(mean(x)^2 / rmse(x, y)^2).
inline double sre(const GrayImage& x, const GrayImage& y) {
  detail::require_same_shape(x, y);
  const double mse = detail::mean_squared_error(x, y);
  require(mse > 0.0, ErrorCode::UndefinedForIdentical, "SRE is undefined for identical images");
  const double mu = detail::mean(x.pixels());
  require(mu > 0.0, ErrorCode::UndefinedZeroMean, "SRE is undefined when the signal image has zero mean");
  return 10.0 * std::log10((mu * mu) / mse);
}

/// SSIM evaluated once over the whole image with unbiased (n-1) moments.
inline double ssim_global(const GrayImage& x, const GrayImage& y, const SsimParams& p = {}) {
  detail::require_same_shape(x, y);
  require(x.size() >= 2, ErrorCode::InvalidArgument, "SSIM needs at least 2 pixels");
  p.validate();
  const auto& a = x.pixels();
  const auto& b = y.pixels();
  const double mu_x = detail::mean(a);
  const double mu_y = detail::mean(b);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i] - mu_x;
    const double dy = b[i] - mu_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double denom = static_cast<double>(a.size() - 1);
  return detail::ssim_from_moments(mu_x, mu_y, sxx / denom, syy / denom, sxy / denom, p);
}

/**
 * Mean SSIM over all window x window positions whose origins lie on the
 * stride lattice (x0, y0 in {0, s, 2s, ...} with the window inside the
 * image).
 *
 * Window moments come from summed-area tables built on mean-centred pixels,
 * which keeps every window O(1) while bounding cancellation error. When
 * x == y the x and xy tables are bitwise equal, so the result is exactly 1.
 */
inline double mssim(const GrayImage& x, const GrayImage& y, const SsimParams& p = {}) {
  detail::require_same_shape(x, y);
  p.validate();
  const std::size_t w = x.width();
  const std::size_t h = x.height();
  require(p.window <= w && p.window <= h, ErrorCode::WindowTooLarge,
          "window " + std::to_string(p.window) + " exceeds image " + std::to_string(w) + "x" + std::to_string(h));

  const double shift_x = detail::mean(x.pixels());
  const double shift_y = detail::mean(y.pixels());

  // Tables have an extra leading row/column of zeros: T[(y)*(w+1)+x] sums
  // the rectangle [0,x) x [0,y).
  const std::size_t tw = w + 1;
  std::vector<double> sx((w + 1) * (h + 1), 0.0), sy(sx), sxx(sx), syy(sx), sxy(sx);
  for (std::size_t r = 0; r < h; ++r) {
    double rx = 0, ry = 0, rxx = 0, ryy = 0, rxy = 0;
    for (std::size_t c = 0; c < w; ++c) {
      const double a = x.at(c, r) - shift_x;
      const double b = y.at(c, r) - shift_y;
      rx += a;
      ry += b;
      rxx += a * a;
      ryy += b * b;
      rxy += a * b;
      const std::size_t i = (r + 1) * tw + (c + 1);
      const std::size_t up = r * tw + (c + 1);
      sx[i] = sx[up] + rx;
      sy[i] = sy[up] + ry;
      sxx[i] = sxx[up] + rxx;
      syy[i] = syy[up] + ryy;
      sxy[i] = sxy[up] + rxy;
    }
  }

  const std::size_t k = p.window;
  const double n = static_cast<double>(k * k);
  auto box = [&](const std::vector<double>& t, std::size_t x0, std::size_t y0) {
    const std::size_t x1 = x0 + k;
    const std::size_t y1 = y0 + k;
    return t[y1 * tw + x1] - t[y0 * tw + x1] - t[y1 * tw + x0] + t[y0 * tw + x0];
  };

  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t y0 = 0; y0 + k <= h; y0 += p.stride) {
    for (std::size_t x0 = 0; x0 + k <= w; x0 += p.stride) {
      const double bx = box(sx, x0, y0);
      const double by = box(sy, x0, y0);
      const double mu_cx = bx / n;
      const double mu_cy = by / n;
      const double var_x = (box(sxx, x0, y0) - bx * mu_cx) / (n - 1.0);
      const double var_y = (box(syy, x0, y0) - by * mu_cy) / (n - 1.0);
      const double cov = (box(sxy, x0, y0) - bx * mu_cy) / (n - 1.0);
      total += detail::ssim_from_moments(mu_cx + shift_x, mu_cy + shift_y, var_x, var_y, cov, p);
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

}  // namespace augmetrics
