#pragma once

#include <limits>

namespace prefcc {

inline constexpr double kDefaultActionScale = 0.025;

struct RateBounds {
  double floor = 0.1;  // packets/second
  double ceiling = std::numeric_limits<double>::infinity();
};

// Multiplicative rate update driven by a signed action:
//   a > 0: x * (1 + alpha * a)
//   a < 0: x / (1 - alpha * a)
// The result is clamped to `bounds`. Throws InvalidArgument if x_prev <= 0
// or the action is NaN.
double apply_action(double x_prev, double action, double alpha = kDefaultActionScale,
                    RateBounds bounds = {});

}  // namespace prefcc
