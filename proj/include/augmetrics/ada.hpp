#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <string>

#include "augmetrics/error.hpp"

namespace augmetrics {

/// Mean of sign(x) over raw discriminator outputs; sign(0) = 0.
inline double sign_mean(std::span<const double> outputs) {
  require(!outputs.empty(), ErrorCode::EmptyWindow, "no discriminator outputs");
  double sum = 0.0;
  for (double v : outputs) sum += (v > 0.0) - (v < 0.0);
  return sum / static_cast<double>(outputs.size());
}

/**
 * Adaptive augmentation probability controller.
 *
 * Holds the last N mini-batch sign means; after each observation the
 * overfitting estimate r_t is their mean, and p moves by a fixed step:
 * up when r_t > target, down otherwise (ties decrease). p starts at 0 and
 * stays in [0, 1]. A value within min(1e-9, step/2) of a bound after a step is snapped
 * onto it so that repeated steps reach the bound in exactly ceil(1/step)
 * observations despite accumulated rounding.
 */
class AdaController {
 public:
  static constexpr double kDefaultTarget = 0.6;
  static constexpr double kDefaultStep = 0.01;
  static constexpr std::size_t kDefaultWindow = 4;

  AdaController(double target = kDefaultTarget, double step = kDefaultStep, std::size_t window = kDefaultWindow)
      : target_(target), step_(step), window_(window) {
    require(target > 0.0 && target < 1.0, ErrorCode::InvalidArgument, "target must lie in (0, 1)");
    require(step > 0.0 && std::isfinite(step), ErrorCode::InvalidArgument, "step must be positive");
    require(window >= 1, ErrorCode::InvalidArgument, "window length must be at least 1");
  }

  /// Pushes one sign mean, re-estimates r_t and adjusts p. Returns p.
  double observe(double batch_sign_mean) {
    require(batch_sign_mean >= -1.0 && batch_sign_mean <= 1.0, ErrorCode::OutOfRange,
            "sign mean " + std::to_string(batch_sign_mean) + " outside [-1, 1]");
    history_.push_back(batch_sign_mean);
    if (history_.size() > window_) history_.pop_front();

    double next = r_t() > target_ ? p_ + step_ : p_ - step_;
    const double snap = std::min(kSnap, step_ / 2.0);
    if (next >= 1.0 - snap) next = 1.0;
    if (next <= snap) next = 0.0;
    p_ = std::clamp(next, 0.0, 1.0);
    return p_;
  }

  double r_t() const {
    require(!history_.empty(), ErrorCode::EmptyWindow, "no observations yet");
    double sum = 0.0;
    for (double v : history_) sum += v;
    return sum / static_cast<double>(history_.size());
  }

  double p() const noexcept { return p_; }
  double target() const noexcept { return target_; }
  double step() const noexcept { return step_; }
  std::size_t window() const noexcept { return window_; }
  const std::deque<double>& history() const noexcept { return history_; }

 private:
  static constexpr double kSnap = 1e-9;

  double target_;
  double step_;
  std::size_t window_;
  double p_ = 0.0;
  std::deque<double> history_;
};

}  // namespace augmetrics
