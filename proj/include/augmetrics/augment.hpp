#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "augmetrics/error.hpp"
#include "augmetrics/image.hpp"
#include "augmetrics/manifest.hpp"
#include "augmetrics/parallel.hpp"
#include "augmetrics/png_io.hpp"
#include "augmetrics/rng.hpp"

namespace augmetrics {

namespace detail {

/// Resamples img through an inverse map dst -> src (pixel-centre
/// coordinates), bilinear with edge replication.
template <typename InverseMap>
GrayImage warp(const GrayImage& img, InverseMap&& to_source) {
  std::vector<double> out(img.size());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const auto [sx, sy] = to_source(static_cast<double>(x), static_cast<double>(y));
      out[y * img.width() + x] = clamp01(sample_bilinear(img, sx, sy));
    }
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

/// cos/sin with exact values at multiples of 90 degrees.
inline std::pair<double, double> cos_sin_degrees(double degrees) {
  const double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    switch ((static_cast<long long>(std::round(quarter)) % 4 + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

}  // namespace detail

/**
 * Rotation about the image centre. Positive angles turn the content
 * counterclockwise as displayed (y axis pointing down). Pixels that map
 * outside the frame take the nearest edge value.
 */
inline GrayImage rotate(const GrayImage& img, double degrees) {
  require(std::abs(degrees) <= 180.0, ErrorCode::InvalidArgument, "rotation angle must be within [-180, 180]");
  if (degrees == 0.0) return img;
  const auto [c, s] = detail::cos_sin_degrees(degrees);
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  // Counterclockwise on screen is clockwise in (x right, y down) maths
  // coordinates; the inverse map therefore rotates by +angle.
  return detail::warp(img, [&](double x, double y) {
    const double dx = x - cx;
    const double dy = y - cy;
    return std::pair{cx + c * dx - s * dy, cy + s * dx + c * dy};
  });
}

/// Integer translation by round(frac * extent) pixels (positive = right /
/// down). The vacated band repeats the last row or column that was moved.
inline GrayImage shift(const GrayImage& img, double dx_frac, double dy_frac) {
  require(std::abs(dx_frac) <= 0.5 && std::abs(dy_frac) <= 0.5, ErrorCode::InvalidArgument,
          "shift fractions must be within [-0.5, 0.5]");
  const auto w = static_cast<long long>(img.width());
  const auto h = static_cast<long long>(img.height());
  const long long sx = std::llround(dx_frac * static_cast<double>(w));
  const long long sy = std::llround(dy_frac * static_cast<double>(h));
  if (sx == 0 && sy == 0) return img;
  std::vector<double> out(img.size());
  for (long long y = 0; y < h; ++y) {
    const auto src_y = static_cast<std::size_t>(std::clamp(y - sy, 0LL, h - 1));
    for (long long x = 0; x < w; ++x) {
      const auto src_x = static_cast<std::size_t>(std::clamp(x - sx, 0LL, w - 1));
      out[static_cast<std::size_t>(y * w + x)] = img.at(src_x, src_y);
    }
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

/**
 * Stretch between opposite vertices.
 *
 * The affine map is p' = p + t(p) * v with t(p) = (px/a + py/b) / 2 for
 * centred coordinates p and half extents a = (W-1)/2, b = (H-1)/2. For
 * frac >= 0, v = (frac*W, frac*H): the top-left and bottom-right corners
 * move outwards along the main diagonal by frac*W, frac*H pixels and the two
 * other corners stay fixed. For frac < 0 the roles of the diagonals swap, so
 * the anti-diagonal corners move out by |frac|*W, |frac|*H. The map is
 * never singular for |frac| <= 0.5.
 */
inline GrayImage stretch(const GrayImage& img, double frac) {
  require(std::abs(frac) <= 0.5, ErrorCode::InvalidArgument, "stretch fraction must be within [-0.5, 0.5]");
  if (frac == 0.0 || img.width() < 2 || img.height() < 2) return img;
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  const double mag = std::abs(frac);
  // Gradient of t and displacement direction. For the anti-diagonal, mirror x.
  const double sign_x = frac > 0.0 ? 1.0 : -1.0;
  const double gx = sign_x / (2.0 * cx);
  const double gy = 1.0 / (2.0 * cy);
  const double vx = sign_x * mag * static_cast<double>(img.width());
  const double vy = mag * static_cast<double>(img.height());
  // Inverse by Sherman-Morrison: p = p' - v (g . p') / (1 + g . v).
  const double denom = 1.0 + gx * vx + gy * vy;
  return detail::warp(img, [&](double x, double y) {
    const double px = x - cx;
    const double py = y - cy;
    const double t = (gx * px + gy * py) / denom;
    return std::pair{cx + px - t * vx, cy + py - t * vy};
  });
}

/// Central crop of round((1 - frac) * extent) per axis, resized back.
inline GrayImage zoom(const GrayImage& img, double frac) {
  require(frac >= 0.0 && frac <= 0.5, ErrorCode::InvalidArgument, "zoom fraction must be within [0, 0.5]");
  auto side = [&](std::size_t extent) {
    const auto s = static_cast<std::size_t>(std::llround((1.0 - frac) * static_cast<double>(extent)));
    return std::clamp<std::size_t>(s, 1, extent);
  };
  const std::size_t cw = side(img.width());
  const std::size_t ch = side(img.height());
  if (cw == img.width() && ch == img.height()) return img;
  const Rect r{(img.width() - cw) / 2, (img.height() - ch) / 2, cw, ch};
  return resize_bilinear(crop(img, r), img.width(), img.height());
}

/// Multiplies every pixel by factor and clamps to [0, 1].
inline GrayImage brightness(const GrayImage& img, double factor) {
  require(factor >= 0.0 && std::isfinite(factor), ErrorCode::InvalidArgument, "brightness factor must be >= 0");
  if (factor == 1.0) return img;
  std::vector<double> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = detail::clamp01(img.pixels()[i] * factor);
  return GrayImage(img.width(), img.height(), std::move(out));
}

/// Maximum magnitudes for random augmentation. Rotation in degrees, the
/// rest as fractions of image size (brightness as a fraction of intensity).
struct AugmentParams {
  double rotation_max_deg = 0.0;
  double shift_max_frac = 0.0;
  double stretch_max_frac = 0.0;
  double zoom_max_frac = 0.0;
  double brightness_max_frac = 0.0;

  /// Chosen classical-augmentation setting: 5 deg, 5 %, 5 %, 15 %, 40 %.
  static AugmentParams defaults() { return from_percent(5, 5, 5, 15, 40); }

  static AugmentParams from_percent(double rotation_deg, double shift_pct, double stretch_pct, double zoom_pct,
                                    double brightness_pct) {
    return {rotation_deg, shift_pct / 100.0, stretch_pct / 100.0, zoom_pct / 100.0, brightness_pct / 100.0};
  }

  void validate() const {
    for (double v : {rotation_max_deg, shift_max_frac, stretch_max_frac, zoom_max_frac, brightness_max_frac}) {
      require(std::isfinite(v) && v >= 0.0, ErrorCode::InvalidArgument, "augmentation maxima must be finite and >= 0");
    }
    require(rotation_max_deg <= 180.0, ErrorCode::InvalidArgument, "rotation maximum exceeds 180 degrees");
    require(shift_max_frac <= 0.5 && stretch_max_frac <= 0.5 && zoom_max_frac <= 0.5, ErrorCode::InvalidArgument,
            "shift, stretch and zoom maxima must be <= 0.5");
    require(brightness_max_frac < 1.0, ErrorCode::InvalidArgument, "brightness maximum must be < 1");
  }

  friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

/// The concrete draws made by augment_random, in application order.
struct AugmentDraw {
  double rotation_deg = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
  double stretch = 0.0;
  double zoom = 0.0;
  double brightness = 1.0;
};

inline AugmentDraw draw_augmentation(const AugmentParams& p, std::uint64_t seed) {
  p.validate();
  CounterRng rng(seed);
  AugmentDraw d;
  d.rotation_deg = rng.uniform(-p.rotation_max_deg, p.rotation_max_deg);
  d.shift_x = rng.uniform(-p.shift_max_frac, p.shift_max_frac);
  d.shift_y = rng.uniform(-p.shift_max_frac, p.shift_max_frac);
  d.stretch = rng.uniform(-p.stretch_max_frac, p.stretch_max_frac);
  d.zoom = rng.uniform(0.0, p.zoom_max_frac);
  d.brightness = rng.uniform(1.0 - p.brightness_max_frac, 1.0 + p.brightness_max_frac);
  return d;
}

inline GrayImage apply_augmentation(const GrayImage& img, const AugmentDraw& d) {
  GrayImage out = rotate(img, d.rotation_deg);
  out = shift(out, d.shift_x, d.shift_y);
  out = stretch(out, d.stretch);
  out = zoom(out, d.zoom);
  return brightness(out, d.brightness);
}

/// rotate -> shift -> stretch -> zoom -> brightness with independent uniform
/// draws; deterministic per (img, p, seed).
inline GrayImage augment_random(const GrayImage& img, const AugmentParams& p, std::uint64_t seed) {
  return apply_augmentation(img, draw_augmentation(p, seed));
}

// ---------------------------------------------------------------------------
// Class balancing. Only training-split records are counted and extended.

namespace detail {

inline std::map<std::string, std::vector<std::size_t>> train_indices_by_class(const Manifest& m) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < m.records().size(); ++i) {
    if (m.records()[i].split == Split::Train) by_class[m.records()[i].label].push_back(i);
  }
  return by_class;
}

inline std::string unique_id(const std::set<std::string>& taken, const std::string& wanted) {
  if (!taken.contains(wanted)) return wanted;
  for (std::size_t k = 1;; ++k) {
    std::string candidate = wanted + "~" + std::to_string(k);
    if (!taken.contains(candidate)) return candidate;
  }
}

}  // namespace detail

/// Extends every smaller class with duplicates drawn uniformly with
/// replacement until all training-class counts equal the largest.
inline Manifest balance_by_duplication(const Manifest& m, std::uint64_t seed) {
  require(!m.empty(), ErrorCode::EmptyManifest, "manifest is empty");
  const auto by_class = detail::train_indices_by_class(m);
  require(!by_class.empty(), ErrorCode::EmptyManifest, "manifest has no training records");
  std::size_t target = 0;
  for (const auto& [label, idx] : by_class) target = std::max(target, idx.size());

  std::vector<Record> records = m.records();
  std::set<std::string> taken;
  for (const auto& r : records) taken.insert(r.id);

  const CounterRng root(seed);
  std::size_t class_index = 0;
  for (const auto& [label, idx] : by_class) {
    CounterRng rng = root.fork(class_index++);
    for (std::size_t k = 0; idx.size() + k < target; ++k) {
      const Record& source = m.records()[idx[rng.below(idx.size())]];
      Record dup = source;
      dup.id = detail::unique_id(taken, source.id + "_dup" + std::to_string(k));
      dup.origin = Origin::Dup;
      taken.insert(dup.id);
      records.push_back(std::move(dup));
    }
  }
  return Manifest(std::move(records));
}

struct AugmentJob {
  std::string label;
  std::size_t index = 0;  // per-class synthetic index
  std::size_t source = 0;  // record index in the input manifest
  std::uint64_t seed = 0;
};

/// Plans synthetic images per deficient class: uniformly drawn sources and
/// per-record seeds derived from (master seed, class, index).
inline std::vector<AugmentJob> plan_augmentation(const Manifest& m, std::uint64_t seed) {
  require(!m.empty(), ErrorCode::EmptyManifest, "manifest is empty");
  const auto by_class = detail::train_indices_by_class(m);
  require(!by_class.empty(), ErrorCode::EmptyManifest, "manifest has no training records");
  std::size_t target = 0;
  for (const auto& [label, idx] : by_class) target = std::max(target, idx.size());

  std::vector<AugmentJob> jobs;
  const CounterRng root(seed);
  std::size_t class_index = 0;
  for (const auto& [label, idx] : by_class) {
    const CounterRng class_rng = root.fork(class_index++);
    CounterRng pick = class_rng.fork(0);
    const CounterRng seeds = class_rng.fork(1);
    for (std::size_t k = 0; idx.size() + k < target; ++k) {
      jobs.push_back({label, k, idx[pick.below(idx.size())], seeds.fork(k).next_u64()});
    }
  }
  return jobs;
}

inline std::string synthetic_filename(const std::string& label, std::size_t index) {
  return label + "_synth_" + std::to_string(index) + ".png";
}

/**
 * Balances training classes with synthetic images generated by
 * augment_random from uniformly drawn sources of the deficient class. Files
 * are written to outdir as <class>_synth_<index>.png and appended with
 * origin = aug. Source paths resolve against base_dir when relative.
 * Output is identical for any job count.
 */
inline Manifest balance_by_augmentation(const Manifest& m, const AugmentParams& p, std::uint64_t seed,
                                        const std::filesystem::path& outdir, std::size_t jobs = 1,
                                        const std::filesystem::path& base_dir = {}) {
  p.validate();
  const auto plan = plan_augmentation(m, seed);
  if (plan.empty()) return m;

  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  require(!ec && std::filesystem::is_directory(outdir), ErrorCode::IoError,
          "cannot create output directory '" + outdir.string() + "'");

  parallel_for(plan.size(), jobs, [&](std::size_t i) {
    const AugmentJob& job = plan[i];
    const GrayImage source = load_png(resolve_path(base_dir, m.records()[job.source].path));
    save_png(augment_random(source, p, job.seed), outdir / synthetic_filename(job.label, job.index));
  }, 8);

  std::vector<Record> records = m.records();
  std::set<std::string> taken;
  for (const auto& r : records) taken.insert(r.id);
  for (const auto& job : plan) {
    Record r;
    r.id = detail::unique_id(taken, job.label + "_synth_" + std::to_string(job.index));
    r.path = (outdir / synthetic_filename(job.label, job.index)).string();
    r.label = job.label;
    r.split = Split::Train;
    r.origin = Origin::Aug;
    r.annotated = false;
    taken.insert(r.id);
    records.push_back(std::move(r));
  }
  return Manifest(std::move(records));
}

// ---------------------------------------------------------------------------
// Grid search.

/// One grid point in the units of the grid axes: the geometric level sets
/// rotation (degrees), shift and stretch (percent) jointly; zoom and
/// brightness are percent.
struct GridPoint {
  double geo = 0.0;
  double zoom = 0.0;
  double brightness = 0.0;

  AugmentParams params() const { return AugmentParams::from_percent(geo, geo, geo, zoom, brightness); }

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct ParamGrid {
  std::vector<double> geo_levels;
  std::vector<double> zoom_levels;
  std::vector<double> brightness_levels;

  /// geo {0,5,10} x zoom {10,15,20} x brightness {30,40,50}.
  static ParamGrid classical() { return {{0, 5, 10}, {10, 15, 20}, {30, 40, 50}}; }

  std::size_t size() const { return geo_levels.size() * zoom_levels.size() * brightness_levels.size(); }

  /// Enumeration order: geo outermost, then zoom, then brightness.
  std::vector<GridPoint> points() const {
    std::vector<GridPoint> out;
    out.reserve(size());
    for (double g : geo_levels) {
      for (double z : zoom_levels) {
        for (double b : brightness_levels) out.push_back({g, z, b});
      }
    }
    return out;
  }
};

struct GridResult {
  GridPoint best;
  AugmentParams params;
  double score = 0.0;
  std::vector<std::pair<GridPoint, double>> evaluations;
};

/// Scores every combination once and returns the argmax; ties keep the
/// earliest combination in enumeration order.
template <typename Score>
GridResult grid_search(const ParamGrid& grid, Score&& score) {
  require(grid.size() > 0, ErrorCode::InvalidArgument, "parameter grid is empty");
  GridResult result;
  bool first = true;
  for (const GridPoint& point : grid.points()) {
    const AugmentParams params = point.params();
    const double s = static_cast<double>(score(params));
    result.evaluations.emplace_back(point, s);
    if (first || s > result.score) {
      result.best = point;
      result.params = params;
      result.score = s;
      first = false;
    }
  }
  return result;
}

}  // namespace augmetrics
