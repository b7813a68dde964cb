#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augmetrics/error.hpp"
#include "augmetrics/image.hpp"
#include "augmetrics/manifest.hpp"
#include "augmetrics/parallel.hpp"
#include "augmetrics/rng.hpp"
#include "augmetrics/simmetrics.hpp"

namespace augmetrics {

enum class Metric { Rmse, Sre, Ssim };
enum class DistributionKind { Intra, Inter };

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Rmse: return "rmse";
    case Metric::Sre: return "sre";
    case Metric::Ssim: return "ssim";
  }
  return "";
}

constexpr std::string_view to_string(DistributionKind k) { return k == DistributionKind::Intra ? "intra" : "inter"; }

inline std::optional<Metric> parse_metric(std::string_view token) {
  for (Metric m : {Metric::Rmse, Metric::Sre, Metric::Ssim}) {
    if (token == to_string(m)) return m;
  }
  return std::nullopt;
}

/// Pairwise metric. SSIM means the sliding-window mean (mssim) with `ssim`.
inline double evaluate_metric(Metric metric, const GrayImage& x, const GrayImage& y, const SsimParams& ssim = {}) {
  switch (metric) {
    case Metric::Rmse: return rmse(x, y);
    case Metric::Sre: return sre(x, y);
    case Metric::Ssim: return mssim(x, y, ssim);
  }
  fail(ErrorCode::InvalidArgument, "unknown metric");
}

struct SimilarityDistribution {
  Metric metric = Metric::Rmse;
  DistributionKind kind = DistributionKind::Intra;
  std::vector<double> values;  // ascending
  std::vector<std::string> sample_a;
  std::vector<std::string> sample_b;  // empty for intra
  std::uint64_t seed = 0;
  std::size_t dropped = 0;  // pairs where SRE is undefined
};

struct PairOptions {
  Metric metric = Metric::Rmse;
  SsimParams ssim{};
  std::size_t jobs = 1;
};

/**
 * n distinct record ids of `label`, drawn uniformly without replacement in
 * manifest order, optionally restricted to one split and/or origin.
 */
inline std::vector<std::string> sample_images(const Manifest& m, const std::string& label, std::size_t n,
                                               std::uint64_t seed, std::optional<Split> split = std::nullopt,
                                               std::optional<Origin> origin = std::nullopt) {
  std::vector<const Record*> pool;
  for (const auto& r : m.records()) {
    if (r.label != label) continue;
    if (split && r.split != *split) continue;
    if (origin && r.origin != *origin) continue;
    pool.push_back(&r);
  }
  require(pool.size() >= n, ErrorCode::InsufficientImages,
          "class '" + label + "' has " + std::to_string(pool.size()) + " eligible images, need " + std::to_string(n));
  CounterRng rng(seed);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t idx : sample_without_replacement(pool.size(), n, rng)) ids.push_back(pool[idx]->id);
  return ids;
}

namespace detail {

inline bool is_sre_undefined(const Error& e) {
  return e.code() == ErrorCode::UndefinedForIdentical || e.code() == ErrorCode::UndefinedZeroMean;
}

/// Evaluates `count` pairs into index-addressed slots, then compacts out
/// undefined SRE values and sorts. Output is independent of `jobs`.
template <typename PairAt>
void collect_pairs(std::size_t count, const PairOptions& opt, PairAt&& pair_at, SimilarityDistribution& dist) {
  constexpr double kDropped = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> slots(count);
  parallel_for(count, opt.jobs, [&](std::size_t i) {
    const auto [x, y] = pair_at(i);
    try {
      slots[i] = evaluate_metric(opt.metric, *x, *y, opt.ssim);
    } catch (const Error& e) {
      if (opt.metric != Metric::Sre || !is_sre_undefined(e)) throw;
      slots[i] = kDropped;
    }
  });
  dist.values.clear();
  dist.values.reserve(count);
  for (double v : slots) {
    if (std::isnan(v)) {
      ++dist.dropped;
    } else {
      dist.values.push_back(v);
    }
  }
  std::sort(dist.values.begin(), dist.values.end());
}

}  // namespace detail

/// Metric on every unordered pair (i < j) of one sample.
inline SimilarityDistribution intra_similarity(std::span<const GrayImage> images, const PairOptions& opt = {}) {
  require(images.size() >= 2, ErrorCode::InsufficientImages, "intra-similarity needs at least 2 images");
  const std::size_t n = images.size();
  const std::size_t count = n * (n - 1) / 2;
  // Row offsets so pair index -> (i, j) is O(log n).
  std::vector<std::size_t> row_start(n);
  for (std::size_t i = 0, acc = 0; i < n; ++i) {
    row_start[i] = acc;
    acc += n - 1 - i;
  }
  SimilarityDistribution dist;
  dist.metric = opt.metric;
  dist.kind = DistributionKind::Intra;
  detail::collect_pairs(count, opt, [&](std::size_t k) {
    const auto it = std::upper_bound(row_start.begin(), row_start.end(), k);
    const auto i = static_cast<std::size_t>(it - row_start.begin()) - 1;
    const std::size_t j = i + 1 + (k - row_start[i]);
    return std::pair{&images[i], &images[j]};
  }, dist);
  return dist;
}

/// Metric on every cross pair (a, b); a is the SRE signal.
inline SimilarityDistribution inter_similarity(std::span<const GrayImage> a, std::span<const GrayImage> b,
                                               const PairOptions& opt = {}) {
  require(!a.empty() && !b.empty(), ErrorCode::InsufficientImages, "inter-similarity needs nonempty samples");
  SimilarityDistribution dist;
  dist.metric = opt.metric;
  dist.kind = DistributionKind::Inter;
  const std::size_t m = b.size();
  detail::collect_pairs(a.size() * m, opt, [&](std::size_t k) {
    return std::pair{&a[k / m], &b[k % m]};
  }, dist);
  return dist;
}

using ImageLoader = std::function<GrayImage(const std::string& id)>;

inline std::vector<GrayImage> load_images(const std::vector<std::string>& ids, const ImageLoader& loader) {
  std::vector<GrayImage> images;
  images.reserve(ids.size());
  for (const auto& id : ids) images.push_back(loader(id));
  return images;
}

inline SimilarityDistribution intra_similarity(const std::vector<std::string>& ids, const ImageLoader& loader,
                                               const PairOptions& opt = {}) {
  const auto images = load_images(ids, loader);
  auto dist = intra_similarity(std::span<const GrayImage>(images), opt);
  dist.sample_a = ids;
  return dist;
}

inline SimilarityDistribution inter_similarity(const std::vector<std::string>& ids_a,
                                               const std::vector<std::string>& ids_b, const ImageLoader& loader,
                                               const PairOptions& opt = {}) {
  const auto images_a = load_images(ids_a, loader);
  const auto images_b = load_images(ids_b, loader);
  auto dist = inter_similarity(std::span<const GrayImage>(images_a), std::span<const GrayImage>(images_b), opt);
  dist.sample_a = ids_a;
  dist.sample_b = ids_b;
  return dist;
}

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
};

inline constexpr std::size_t kDefaultBins = 50;

/// `bins` uniform edges over the pooled [min, max] of all given
/// distributions. A degenerate range is widened to [v - 0.5, v + 0.5].
inline std::vector<double> uniform_edges(std::span<const SimilarityDistribution* const> dists,
                                         std::size_t bins = kDefaultBins) {
  require(bins >= 1, ErrorCode::InvalidArgument, "need at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* d : dists) {
    if (d->values.empty()) continue;
    lo = std::min(lo, d->values.front());
    hi = std::max(hi, d->values.back());
  }
  require(std::isfinite(lo), ErrorCode::EmptyDistribution, "no values to bin");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

/// Counts over half-open bins [e_i, e_{i+1}), the last bin closed.
/// Density = count / (total * width), so it integrates to 1.
inline Histogram histogram(std::span<const double> values, std::vector<double> edges) {
  require(!values.empty(), ErrorCode::EmptyDistribution, "cannot histogram an empty distribution");
  require(edges.size() >= 2, ErrorCode::InvalidArgument, "need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    require(edges[i] > edges[i - 1], ErrorCode::InvalidArgument, "bin edges must be strictly ascending");
  }
  Histogram h;
  h.counts.assign(edges.size() - 1, 0);
  for (double v : values) {
    require(v >= edges.front() && v <= edges.back(), ErrorCode::OutOfRange,
            "value " + std::to_string(v) + " outside histogram range");
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (bin >= h.counts.size()) bin = h.counts.size() - 1;
    ++h.counts[bin];
  }
  const double total = static_cast<double>(values.size());
  h.density.resize(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    h.density[i] = static_cast<double>(h.counts[i]) / (total * (edges[i + 1] - edges[i]));
  }
  h.edges = std::move(edges);
  return h;
}

inline Histogram histogram(const SimilarityDistribution& dist, std::size_t bins = kDefaultBins) {
  require(!dist.values.empty(), ErrorCode::EmptyDistribution, "cannot histogram an empty distribution");
  const SimilarityDistribution* one[] = {&dist};
  return histogram(dist.values, uniform_edges(one, bins));
}

namespace detail {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  require(out.good(), ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

inline std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace detail

inline std::string format_histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,count,density\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out += detail::format_real(h.edges[i]) + ',' + detail::format_real(h.edges[i + 1]) + ',' +
           std::to_string(h.counts[i]) + ',' + detail::format_real(h.density[i]) + '\n';
  }
  return out;
}

inline std::string format_values(const SimilarityDistribution& d) {
  std::string out;
  out.reserve(d.values.size() * 24);
  for (double v : d.values) {
    out += detail::format_real(v);
    out += '\n';
  }
  return out;
}

inline std::string format_distribution_meta(const SimilarityDistribution& d) {
  std::string out;
  out += "metric=" + std::string(to_string(d.metric)) + '\n';
  out += "kind=" + std::string(to_string(d.kind)) + '\n';
  out += "seed=" + std::to_string(d.seed) + '\n';
  out += "count=" + std::to_string(d.values.size()) + '\n';
  out += "dropped=" + std::to_string(d.dropped) + '\n';
  if (d.metric == Metric::Sre) out += "sre_signal=sample_a\n";
  out += "sample_a=" + detail::join(d.sample_a, ';') + '\n';
  if (d.kind == DistributionKind::Inter) out += "sample_b=" + detail::join(d.sample_b, ';') + '\n';
  return out;
}

/// Writes <stem>.csv (histogram), <stem>.values and <stem>.meta into dir.
inline void export_distribution(const SimilarityDistribution& d, const Histogram& h,
                                const std::filesystem::path& dir, const std::string& stem) {
  detail::write_text(dir / (stem + ".csv"), format_histogram_csv(h));
  detail::write_text(dir / (stem + ".values"), format_values(d));
  detail::write_text(dir / (stem + ".meta"), format_distribution_meta(d));
}

}  // namespace augmetrics
