#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "liveload/common.hpp"

namespace liveload {

enum class SignClass { nonnegative, signed_field };
enum class Smoothness { lipschitz, c2, c3 };

inline std::string to_string(SignClass s) { return s == SignClass::nonnegative ? "nonnegative" : "signed"; }

inline std::string to_string(Smoothness s) {
  switch (s) {
    case Smoothness::lipschitz: return "lipschitz";
    case Smoothness::c2: return "c2";
    case Smoothness::c3: return "c3";
  }
  return "unknown";
}

// Scalar pressure intensity with its gradient. Immutable once built.
struct PressureField {
  std::string name = "zero";
  std::function<double(const Vec2&)> eval = [](const Vec2&) { return 0.0; };
  std::function<Vec2(const Vec2&)> grad = [](const Vec2&) { return Vec2::Zero().eval(); };
  SignClass sign_class = SignClass::nonnegative;
  Smoothness smoothness = Smoothness::c3;
  std::optional<double> growth;  // exponent of the bound on the negative part
  bool identically_zero = false;

  double operator()(const Vec2& x) const { return eval(x); }
  Vec2 gradient(const Vec2& x) const { return grad(x); }

  // Central differences of the gradient; only meaningful for c2 fields.
  Mat2 hessian(const Vec2& x, double h = 1e-5) const {
    Mat2 H;
    for (int j = 0; j < 2; ++j) {
      Vec2 e = Vec2::Zero();
      e[j] = h;
      H.col(j) = (grad(x + e) - grad(x - e)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
  }

  bool at_least_c2() const { return smoothness != Smoothness::lipschitz; }
};

inline PressureField zero_pressure() {
  PressureField f;
  f.name = "zero";
  f.identically_zero = true;
  return f;
}

inline PressureField constant_pressure(double p0) {
  if (!std::isfinite(p0)) throw ValidationError("constant pressure requires a finite p0");
  PressureField f;
  f.name = "constant";
  f.eval = [p0](const Vec2&) { return p0; };
  f.sign_class = p0 >= 0.0 ? SignClass::nonnegative : SignClass::signed_field;
  if (p0 < 0.0) f.growth = 0.0;
  f.identically_zero = p0 == 0.0;
  return f;
}

// Planar analogue of hydrostatic loading: proportional to the negative part of
// the second coordinate.
inline PressureField hydrostatic_pressure(double g_rho) {
  if (!(g_rho >= 0.0) || !std::isfinite(g_rho)) throw ValidationError("hydrostatic pressure requires g_rho >= 0");
  PressureField f;
  f.name = "hydrostatic";
  f.eval = [g_rho](const Vec2& y) { return g_rho * std::max(-y.y(), 0.0); };
  f.grad = [g_rho](const Vec2& y) { return y.y() < 0.0 ? Vec2(0.0, -g_rho) : Vec2(0.0, 0.0); };
  f.smoothness = Smoothness::lipschitz;
  return f;
}

enum class ProfileVariant { strict, flat };

inline ProfileVariant parse_variant(const std::string& s) {
  if (s == "strict") return ProfileVariant::strict;
  if (s == "flat") return ProfileVariant::flat;
  throw ValidationError("unknown pressure.variant '" + s + "' (expected strict or flat)");
}

inline std::string to_string(ProfileVariant v) { return v == ProfileVariant::strict ? "strict" : "flat"; }

// Angular profile phi on [0, pi/2] and radial profile psi on [1, inf) of the
// four-lobe pressure.
//
// strict: phi'(a) = a^3 (pi/2 - a)^3, so phi is strictly increasing.
// flat:   phi'(a) = u^4 with u the normalized parabola vanishing at pi/4 and
//         3pi/8, so phi vanishes on [0, pi/4].
// psi(rho) = 20/9 (rho - 1)^3, smoothly cut off between rho = 2 and rho = 3.
class ExampleProfile {
 public:
  explicit ExampleProfile(ProfileVariant variant = ProfileVariant::strict) : variant_(variant) {}

  ProfileVariant variant() const { return variant_; }

  static constexpr double kQuarter = 0.5 * kPi;
  static constexpr double kFlatLo = 0.25 * kPi;
  static constexpr double kFlatHi = 0.375 * kPi;

  // phi and its first three derivatives on [0, pi/2]; outside, phi is
  // extended by its end values and the derivatives by zero.
  double phi(double a) const {
    a = std::clamp(a, 0.0, kQuarter);
    if (variant_ == ProfileVariant::strict) {
      const double c = kQuarter;
      const double a4 = a * a * a * a;
      return c * c * c * a4 / 4.0 - 3.0 * c * c * a4 * a / 5.0 + c * a4 * a * a / 2.0 - a4 * a * a * a / 7.0;
    }
    if (a <= kFlatLo) return 0.0;
    const double len = kFlatHi - kFlatLo;
    const double t = std::min((a - kFlatLo) / len, 1.0);
    const double t5 = t * t * t * t * t;
    const double poly = t5 / 5.0 - 2.0 * t5 * t / 3.0 + 6.0 * t5 * t * t / 7.0 - t5 * t * t * t / 2.0 +
                        t5 * t * t * t * t / 9.0;
    return len * 256.0 * poly;
  }

  double dphi(double a) const {
    if (a <= 0.0 || a >= kQuarter) return 0.0;
    if (variant_ == ProfileVariant::strict) {
      const double u = a * (kQuarter - a);
      return u * u * u;
    }
    if (a <= kFlatLo || a >= kFlatHi) return 0.0;
    const double u = flat_u(a);
    return u * u * u * u;
  }

  double d2phi(double a) const {
    if (a <= 0.0 || a >= kQuarter) return 0.0;
    if (variant_ == ProfileVariant::strict) {
      const double u = a * (kQuarter - a);
      return 3.0 * u * u * (kQuarter - 2.0 * a);
    }
    if (a <= kFlatLo || a >= kFlatHi) return 0.0;
    const double u = flat_u(a);
    return 4.0 * u * u * u * flat_du(a);
  }

  double d3phi(double a) const {
    if (a <= 0.0 || a >= kQuarter) return 0.0;
    if (variant_ == ProfileVariant::strict) {
      const double u = a * (kQuarter - a);
      const double du = kQuarter - 2.0 * a;
      return 6.0 * u * du * du - 6.0 * u * u;
    }
    if (a <= kFlatLo || a >= kFlatHi) return 0.0;
    const double u = flat_u(a);
    const double du = flat_du(a);
    return 12.0 * u * u * du * du + 4.0 * u * u * u * flat_d2u();
  }

  double psi(double rho) const {
    if (rho <= 1.0) return 0.0;
    const double s = rho - 1.0;
    return (20.0 / 9.0) * s * s * s * cutoff(rho);
  }

  double dpsi(double rho) const {
    if (rho <= 1.0) return 0.0;
    const double s = rho - 1.0;
    return (20.0 / 9.0) * (3.0 * s * s * cutoff(rho) + s * s * s * dcutoff(rho));
  }

  double d2psi(double rho) const {
    if (rho <= 1.0) return 0.0;
    const double s = rho - 1.0;
    return (20.0 / 9.0) * (6.0 * s * cutoff(rho) + 6.0 * s * s * dcutoff(rho) + s * s * s * d2cutoff(rho));
  }

  // Rotation functional of the four-lobe domain in closed form, for any angle.
  double rotation_profile(double alpha) const {
    const double a = normalize_angle(alpha);
    const double top = phi(kQuarter);
    if (a < kQuarter) return phi(a);
    if (a < kPi) return top - phi(a - kQuarter);
    if (a < 1.5 * kPi) return phi(a - kPi);
    return top - phi(a - 1.5 * kPi);
  }

  // Integral of rho * psi over [1, 2]; 5-point Gauss on subintervals is exact
  // for the quartic integrand.
  double psi_normalization() const {
    const double x1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double x2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double nodes[5] = {-x2, -x1, 0.0, x1, x2};
    const double w0 = 128.0 / 225.0;
    const double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    const double weights[5] = {w2, w1, w0, w1, w2};
    const int n = 16;
    CompensatedSum total;
    for (int k = 0; k < n; ++k) {
      const double lo = 1.0 + static_cast<double>(k) / n;
      const double half = 0.5 / n;
      for (int i = 0; i < 5; ++i) {
        const double r = lo + half * (1.0 + nodes[i]);
        total.add(half * weights[i] * r * psi(r));
      }
    }
    return total.value();
  }

  void validate() const {
    if (std::abs(psi_normalization() - 1.0) > 1e-8) throw ValidationError("profile psi is not normalized");
    const double checks[] = {dphi(0.0), d2phi(0.0), d3phi(0.0), dphi(kQuarter), d2phi(kQuarter), d3phi(kQuarter),
                             psi(1.0), dpsi(1.0), d2psi(1.0)};
    for (double v : checks) {
      if (std::abs(v) > 1e-10) throw ValidationError("profile endpoint conditions violated");
    }
  }

 private:
  static double flat_u(double a) {
    const double w = 0.5 * (kFlatHi - kFlatLo);
    return (a - kFlatLo) * (kFlatHi - a) / (w * w);
  }
  static double flat_du(double a) {
    const double w = 0.5 * (kFlatHi - kFlatLo);
    return (kFlatLo + kFlatHi - 2.0 * a) / (w * w);
  }
  static double flat_d2u() {
    const double w = 0.5 * (kFlatHi - kFlatLo);
    return -2.0 / (w * w);
  }

  // 1 on [1, 2], 0 on [3, inf), C^3 septic smoothstep in between.
  static double cutoff(double rho) {
    if (rho <= 2.0) return 1.0;
    if (rho >= 3.0) return 0.0;
    const double t = rho - 2.0;
    const double t4 = t * t * t * t;
    return 1.0 - (35.0 * t4 - 84.0 * t4 * t + 70.0 * t4 * t * t - 20.0 * t4 * t * t * t);
  }
  static double dcutoff(double rho) {
    if (rho <= 2.0 || rho >= 3.0) return 0.0;
    const double t = rho - 2.0;
    const double v = t * (1.0 - t);
    return -140.0 * v * v * v;
  }
  static double d2cutoff(double rho) {
    if (rho <= 2.0 || rho >= 3.0) return 0.0;
    const double t = rho - 2.0;
    const double v = t * (1.0 - t);
    return -420.0 * v * v * (1.0 - 2.0 * t);
  }

  ProfileVariant variant_;
};

// psi(|x|) phi'(theta) on the open first quadrant outside the unit disk.
inline PressureField example52_pressure(const ExampleProfile& profile) {
  profile.validate();
  auto prof = std::make_shared<const ExampleProfile>(profile);
  PressureField f;
  f.name = "example52";
  f.eval = [prof](const Vec2& x) {
    if (!(x.x() > 0.0 && x.y() > 0.0)) return 0.0;
    const double rho = x.norm();
    if (rho <= 1.0) return 0.0;
    return prof->psi(rho) * prof->dphi(std::atan2(x.y(), x.x()));
  };
  f.grad = [prof](const Vec2& x) -> Vec2 {
    if (!(x.x() > 0.0 && x.y() > 0.0)) return Vec2::Zero();
    const double rho = x.norm();
    if (rho <= 1.0) return Vec2::Zero();
    const double theta = std::atan2(x.y(), x.x());
    const double dr = prof->dpsi(rho) * prof->dphi(theta);
    const double dt = prof->psi(rho) * prof->d2phi(theta);
    return dr * x / rho + dt * perp(x) / (rho * rho);
  };
  f.smoothness = Smoothness::c2;
  return f;
}

inline PressureField builtin_pressure(const std::string& name, double param = 0.0,
                                      ProfileVariant variant = ProfileVariant::strict) {
  if (name == "zero") return zero_pressure();
  if (name == "constant") return constant_pressure(param);
  if (name == "hydrostatic") return hydrostatic_pressure(param);
  if (name == "example52") return example52_pressure(ExampleProfile(variant));
  throw ValidationError("unknown pressure '" + name + "'");
}

struct ExtensionRadii {
  double r1 = 0.0;  // 0 selects the ball case
  double r2 = 1.0;
  double delta = 0.25;
};

// Default radii around a reference configuration spanning [r_min, r_max].
inline ExtensionRadii default_extension_radii(double r_min, double r_max, bool contains_origin) {
  ExtensionRadii e;
  e.r2 = 1.25 * r_max;
  if (contains_origin) {
    e.r1 = 0.0;
    e.delta = 0.25 * r_max;
  } else {
    e.r1 = 0.8 * r_min;
    e.delta = std::min(0.25 * r_max, 0.5 * e.r1);
  }
  return e;
}

namespace detail {

struct ExtensionData {
  PressureField base;
  ExtensionRadii radii;
  double slope = 0.0;
};

inline double sampled_lipschitz(const PressureField& pi, double lo, double hi) {
  double best = 0.0;
  const int nr = 48, nt = 192;
  for (int i = 0; i <= nr; ++i) {
    const double r = lo + (hi - lo) * i / nr;
    for (int j = 0; j < nt; ++j) {
      const double t = kTwoPi * (j + 0.5) / nt;
      best = std::max(best, pi.gradient(Vec2(r * std::cos(t), r * std::sin(t))).norm());
    }
  }
  return best;
}

inline double sampled_circle_max(const PressureField& pi, double r) {
  double best = 0.0;
  const int nt = 720;
  for (int j = 0; j < nt; ++j) {
    const double t = kTwoPi * j / nt;
    best = std::max(best, pi(Vec2(r * std::cos(t), r * std::sin(t))));
  }
  return best;
}

// r1 <= n <= r2, with a few ulps of slack for the rounding of |y|.
inline bool on_closed_annulus(double n, const ExtensionRadii& r) {
  const double slack = 8.0 * std::numeric_limits<double>::epsilon();
  return n >= r.r1 * (1.0 - slack) && n <= r.r2 * (1.0 + slack);
}

// Radially tapered extension of a nonnegative field.
inline PressureField extend_nonnegative(const PressureField& pi, const ExtensionRadii& er) {
  auto data = std::make_shared<ExtensionData>();
  data->base = pi;
  data->radii = er;
  const double lo = std::max(er.r1 - er.delta, 0.0);
  const double lip = sampled_lipschitz(pi, lo, er.r2 + er.delta);
  double bound = sampled_circle_max(pi, er.r2);
  if (er.r1 > 0.0) bound = std::max(bound, sampled_circle_max(pi, er.r1));
  data->slope = std::max(1.05 * lip, bound / er.delta);

  PressureField out;
  out.name = pi.name + "_extended";
  out.sign_class = SignClass::nonnegative;
  out.smoothness = Smoothness::lipschitz;
  out.identically_zero = pi.identically_zero;
  out.eval = [data](const Vec2& y) {
    const auto& r = data->radii;
    const double n = y.norm();
    if (on_closed_annulus(n, r)) return data->base(y);
    if (n >= r.r2) {
      if (n > r.r2 + r.delta) return 0.0;
      return std::max(data->base(r.r2 * y / n) - data->slope * (n - r.r2), 0.0);
    }
    if (n < r.r1 - r.delta) return 0.0;
    const Vec2 on = n > 0.0 ? Vec2(r.r1 * y / n) : Vec2(r.r1, 0.0);
    return std::max(data->base(on) - data->slope * (r.r1 - n), 0.0);
  };
  out.grad = [data](const Vec2& y) -> Vec2 {
    const auto& r = data->radii;
    const double n = y.norm();
    if (on_closed_annulus(n, r)) return data->base.gradient(y);
    const bool outer = n >= r.r2;
    if (outer && n > r.r2 + r.delta) return Vec2::Zero();
    if (!outer && (n < r.r1 - r.delta || n == 0.0)) return Vec2::Zero();
    const double rr = outer ? r.r2 : r.r1;
    const Vec2 yh = y / n;
    const double value = data->base(rr * yh) - data->slope * (outer ? n - rr : rr - n);
    if (value <= 0.0) return Vec2::Zero();
    const Mat2 tangential = Mat2::Identity() - yh * yh.transpose();
    const Vec2 along = (rr / n) * tangential * data->base.gradient(rr * yh);
    return along + (outer ? -data->slope : data->slope) * yh;
  };
  return out;
}

}  // namespace detail

struct GrowthReport {
  bool passed = true;
  double constant = 0.0;  // smallest sampled C
  double exponent = 0.0;  // p / q'
  std::string message;
};

// Samples the negative part out to 10 r2 and fits the growth bound.
inline GrowthReport validate_growth(const PressureField& pi, double p, double q, double r2 = 1.0) {
  GrowthReport rep;
  rep.exponent = q <= 1.0 ? 0.0 : p * (q - 1.0) / q;
  if (pi.sign_class == SignClass::nonnegative) {
    rep.message = "nonnegative field";
    return rep;
  }
  const int nr = 400, nt = 64;
  double mid_max = 0.0, far_max = 0.0;
  for (int i = 0; i <= nr; ++i) {
    const double r = 10.0 * r2 * i / nr;
    for (int j = 0; j < nt; ++j) {
      const double t = kTwoPi * j / nt;
      const double neg = std::max(-pi(Vec2(r * std::cos(t), r * std::sin(t))), 0.0);
      const double ratio = q <= 1.0 ? neg : neg / (1.0 + std::pow(r, rep.exponent));
      rep.constant = std::max(rep.constant, ratio);
      if (r >= 2.5 * r2 && r <= 5.0 * r2) mid_max = std::max(mid_max, ratio);
      if (r >= 5.0 * r2) far_max = std::max(far_max, ratio);
    }
  }
  if (far_max > 1.25 * mid_max + 1e-12) {
    rep.passed = false;
    rep.message = "negative part grows faster than the admissible exponent";
  } else {
    rep.message = "growth bound satisfied on the sampled grid";
  }
  return rep;
}

// Extended field that agrees with pi on the annulus r1 <= |y| <= r2, never
// exceeds it, and is bounded. Signed fields are lifted by the growth
// majorant before tapering.
inline PressureField extend_pressure(const PressureField& pi, const ExtensionRadii& er, double p = 2.0,
                                     double q = 2.0) {
  if (!(er.r2 > er.r1) || !(er.delta > 0.0)) throw ValidationError("extension needs r1 < r2 and delta > 0");
  if (er.r1 > 0.0 && er.delta >= er.r1) throw ValidationError("extension margin delta must be smaller than r1");
  if (pi.identically_zero) {
    PressureField z = zero_pressure();
    z.name = pi.name + "_extended";
    return z;
  }
  if (pi.sign_class == SignClass::nonnegative) return detail::extend_nonnegative(pi, er);

  const GrowthReport growth = validate_growth(pi, p, q, er.r2);
  if (!growth.passed) throw ValidationError("pressure violates the growth bound: " + growth.message);
  const double cbar = growth.constant;
  const double gamma = growth.exponent;
  auto h = [cbar, gamma](const Vec2& y) {
    if (gamma == 0.0) return 1.0 + cbar;
    return std::max(cbar * (1.0 + std::pow(y.norm(), gamma)), 1.0 + cbar);
  };
  auto dh = [cbar, gamma](const Vec2& y) -> Vec2 {
    if (gamma == 0.0) return Vec2::Zero();
    const double n = y.norm();
    if (n == 0.0 || cbar * (1.0 + std::pow(n, gamma)) <= 1.0 + cbar) return Vec2::Zero();
    return cbar * gamma * std::pow(n, gamma - 2.0) * y;
  };
  PressureField lifted;
  lifted.name = pi.name;
  lifted.eval = [pi, h](const Vec2& y) { return std::max(pi(y) + h(y), 0.0); };
  lifted.grad = [pi, dh](const Vec2& y) { return Vec2(pi.gradient(y) + dh(y)); };
  lifted.smoothness = Smoothness::lipschitz;
  const PressureField lifted_ext = detail::extend_nonnegative(lifted, er);

  PressureField out;
  out.name = pi.name + "_extended";
  out.sign_class = SignClass::signed_field;
  out.smoothness = Smoothness::lipschitz;
  out.growth = gamma;
  // on the annulus the lift cancels exactly; return pi itself there
  auto inside = [er](const Vec2& y) { return detail::on_closed_annulus(y.norm(), er); };
  out.eval = [pi, lifted_ext, h, inside](const Vec2& y) { return inside(y) ? pi(y) : lifted_ext(y) - h(y); };
  out.grad = [pi, lifted_ext, dh, inside](const Vec2& y) {
    return inside(y) ? pi.gradient(y) : Vec2(lifted_ext.gradient(y) - dh(y));
  };
  return out;
}

}  // namespace liveload
