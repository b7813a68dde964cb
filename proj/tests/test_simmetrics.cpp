#include <gtest/gtest.h>

#include <cmath>

#include "augmetrics/simmetrics.hpp"
#include "test_support.hpp"

using namespace augmetrics;
using augmetrics::testing::error_code_of;
using augmetrics::testing::random_image;

namespace {

/// Direct two-pass SSIM over one window, in long double. Shares no code with
/// the library.
double oracle_window_ssim(const GrayImage& x, const GrayImage& y, std::size_t x0, std::size_t y0, std::size_t w,
                          std::size_t h, const SsimParams& p) {
  long double sx = 0, sy = 0;
  const long double n = static_cast<long double>(w * h);
  for (std::size_t r = y0; r < y0 + h; ++r) {
    for (std::size_t c = x0; c < x0 + w; ++c) {
      sx += x.at(c, r);
      sy += y.at(c, r);
    }
  }
  const long double mx = sx / n, my = sy / n;
  long double vx = 0, vy = 0, cxy = 0;
  for (std::size_t r = y0; r < y0 + h; ++r) {
    for (std::size_t c = x0; c < x0 + w; ++c) {
      const long double dx = x.at(c, r) - mx, dy = y.at(c, r) - my;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  }
  vx /= n - 1;
  vy /= n - 1;
  cxy /= n - 1;
  const long double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const long double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  return static_cast<double>(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)));
}

double oracle_mssim(const GrayImage& x, const GrayImage& y, const SsimParams& p) {
  long double total = 0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + p.window <= x.height(); y0 += p.stride) {
    for (std::size_t x0 = 0; x0 + p.window <= x.width(); x0 += p.stride) {
      total += oracle_window_ssim(x, y, x0, y0, p.window, p.window, p);
      ++count;
    }
  }
  return static_cast<double>(total / count);
}

}  // namespace

TEST(Rmse, IdenticalIsZero) {
  const auto x = random_image(8, 8, 1);
  EXPECT_EQ(rmse(x, x), 0.0);
}

TEST(Rmse, OnesVsZerosIsOne) { EXPECT_EQ(rmse(GrayImage(5, 3, 1.0), GrayImage(5, 3, 0.0)), 1.0); }

TEST(Rmse, HandEvaluated) {
  const GrayImage x(2, 2, std::vector<double>{0, 0, 1, 1});
  const GrayImage y(2, 2, std::vector<double>{0, 1, 1, 1});
  EXPECT_DOUBLE_EQ(rmse(x, y), 0.5);
}

TEST(Rmse, DimensionMismatch) {
  EXPECT_EQ(error_code_of([] { rmse(GrayImage(2, 2), GrayImage(2, 3)); }), ErrorCode::DimensionMismatch);
}

TEST(Rmse, SymmetricAndTriangle) {
  CounterRng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto x = augmetrics::testing::random_image(6, 5, rng);
    const auto y = augmetrics::testing::random_image(6, 5, rng);
    const auto z = augmetrics::testing::random_image(6, 5, rng);
    EXPECT_EQ(rmse(x, y), rmse(y, x));
    EXPECT_LE(rmse(x, z), rmse(x, y) + rmse(y, z) + 1e-12);
  }
}

TEST(Sre, IdenticalIsUndefined) {
  const auto x = random_image(4, 4, 3);
  EXPECT_EQ(error_code_of([&] { sre(x, x); }), ErrorCode::UndefinedForIdentical);
}

TEST(Sre, ZeroMeanSignalIsUndefined) {
  EXPECT_EQ(error_code_of([] { sre(GrayImage(3, 3, 0.0), GrayImage(3, 3, 0.2)); }), ErrorCode::UndefinedZeroMean);
}

TEST(Sre, TwentyDecibels) {
  // mean(x) = 0.5, rmse = 0.05 -> 10 log10(0.25 / 0.0025) = 20.
  EXPECT_NEAR(sre(GrayImage(4, 4, 0.5), GrayImage(4, 4, 0.55)), 20.0, 1e-9);
}

TEST(Sre, ZeroDecibels) {
  // mean(x) = 0.5, rmse = 0.5.
  EXPECT_NEAR(sre(GrayImage(4, 4, 0.5), GrayImage(4, 4, 1.0)), 0.0, 1e-12);
}

TEST(SsimGlobal, SelfIsOne) {
  const auto x = random_image(16, 16, 4);
  EXPECT_NEAR(ssim_global(x, x), 1.0, 1e-12);
}

TEST(SsimGlobal, AntiCorrelatedIsNegative) {
  const auto y = random_image(16, 16, 5);
  std::vector<double> px;
  for (double v : y.pixels()) px.push_back(1.0 - v);
  EXPECT_LT(ssim_global(GrayImage(16, 16, px), y), -0.5);
}

TEST(SsimGlobal, IndependentNoiseNearZero) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = random_image(64, 64, 1000 + seed);
    const auto b = random_image(64, 64, 5000 + seed);
    EXPECT_LT(std::abs(ssim_global(a, b)), 0.2) << "seed " << seed;
  }
}

TEST(SsimGlobal, MatchesOracleAndIsSymmetric) {
  CounterRng rng(6);
  const SsimParams p;
  for (int i = 0; i < 200; ++i) {
    const auto x = augmetrics::testing::random_image(9, 7, rng);
    const auto y = augmetrics::testing::random_image(9, 7, rng);
    EXPECT_NEAR(ssim_global(x, y), oracle_window_ssim(x, y, 0, 0, 9, 7, p), 1e-12);
    EXPECT_NEAR(ssim_global(x, y), ssim_global(y, x), 1e-12);
  }
}

TEST(SsimGlobal, NeedsTwoPixels) {
  EXPECT_EQ(error_code_of([] { ssim_global(GrayImage(1, 1), GrayImage(1, 1)); }), ErrorCode::InvalidArgument);
}

TEST(Mssim, SelfIsOne) {
  const auto x = random_image(32, 32, 7);
  EXPECT_NEAR(mssim(x, x), 1.0, 1e-12);
  EXPECT_NEAR(mssim(GrayImage(10, 10, 0.3), GrayImage(10, 10, 0.3)), 1.0, 1e-12);
}

TEST(Mssim, WholeImageWindowEqualsGlobal) {
  const auto x = random_image(9, 9, 8);
  const auto y = random_image(9, 9, 9);
  SsimParams p;
  p.window = 9;
  EXPECT_NEAR(mssim(x, y, p), ssim_global(x, y, p), 1e-12);
}

TEST(Mssim, FourWindowsStrideEight) {
  const auto x = random_image(16, 16, 10);
  const auto y = random_image(16, 16, 11);
  SsimParams p;
  p.window = 8;
  p.stride = 8;
  const double expected = (oracle_window_ssim(x, y, 0, 0, 8, 8, p) + oracle_window_ssim(x, y, 8, 0, 8, 8, p) +
                           oracle_window_ssim(x, y, 0, 8, 8, 8, p) + oracle_window_ssim(x, y, 8, 8, 8, 8, p)) /
                          4.0;
  EXPECT_NEAR(mssim(x, y, p), expected, 1e-12);
}

TEST(Mssim, StrideOneMatchesBruteForce) {
  CounterRng rng(12);
  for (std::size_t window : {3u, 5u, 7u}) {
    SsimParams p;
    p.window = window;
    for (int i = 0; i < 20; ++i) {
      const auto x = augmetrics::testing::random_image(12, 12, rng);
      const auto y = augmetrics::testing::random_image(12, 12, rng);
      EXPECT_NEAR(mssim(x, y, p), oracle_mssim(x, y, p), 1e-10);
    }
  }
}

TEST(Mssim, NonSquareAndStrideThree) {
  const auto x = random_image(23, 14, 13);
  const auto y = random_image(23, 14, 14);
  SsimParams p;
  p.window = 5;
  p.stride = 3;
  EXPECT_NEAR(mssim(x, y, p), oracle_mssim(x, y, p), 1e-10);
}

TEST(Mssim, Errors) {
  SsimParams p;
  p.window = 9;
  EXPECT_EQ(error_code_of([&] { mssim(GrayImage(8, 12), GrayImage(8, 12), p); }), ErrorCode::WindowTooLarge);
  EXPECT_EQ(error_code_of([] { mssim(GrayImage(8, 8), GrayImage(8, 9)); }), ErrorCode::DimensionMismatch);
  p.window = 3;
  p.stride = 0;
  EXPECT_EQ(error_code_of([&] { mssim(GrayImage(8, 8), GrayImage(8, 8), p); }), ErrorCode::InvalidArgument);
}

TEST(Ssim, RangeOverRandomPairs) {
  CounterRng rng(14);
  for (int i = 0; i < 2000; ++i) {
    const auto x = augmetrics::testing::random_image(4, 4, rng);
    // Mix in structured partners so negative correlations occur too.
    std::vector<double> px;
    for (double v : x.pixels()) px.push_back(rng.uniform01() < 0.5 ? 1.0 - v : rng.uniform01());
    const GrayImage y(4, 4, px);
    const double g = ssim_global(x, y);
    EXPECT_GE(g, -1.0 - 1e-9);
    EXPECT_LE(g, 1.0 + 1e-9);
    SsimParams p;
    p.window = 3;
    const double m = mssim(x, y, p);
    EXPECT_GE(m, -1.0 - 1e-9);
    EXPECT_LE(m, 1.0 + 1e-9);
  }
}
