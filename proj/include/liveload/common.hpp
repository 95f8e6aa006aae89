#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace liveload {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Invalid user input: bad parameters, malformed configuration, unknown names.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not deliver its post-condition.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Counterclockwise rotation by alpha.
inline Mat2 rotation(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// Generator of SO(2): rotation(a) = exp(a * J).
inline Mat2 rotation_generator() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

inline Vec2 perp(const Vec2& x) { return {-x.y(), x.x()}; }

// Representative of alpha in [0, 2pi).
inline double normalize_angle(double alpha) {
  double a = std::fmod(alpha, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

// Representative of alpha in (-pi, pi].
inline double wrap_signed(double alpha) {
  double a = normalize_angle(alpha);
  if (a > kPi) a -= kTwoPi;
  return a;
}

// Intrinsic distance on SO(2) between rotation angles.
inline double angular_distance(double a, double b) { return std::abs(wrap_signed(a - b)); }

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace liveload
