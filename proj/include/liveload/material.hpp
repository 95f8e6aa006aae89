#pragma once

#include <cmath>
#include <string>

#include "liveload/common.hpp"

namespace liveload {

// Mixed quadratic / r-growth penalty.
inline double g_mixed(double t, double r) {
  if (t < 0.0) throw ValidationError("g_mixed requires t >= 0");
  if (t <= 1.0) return 0.5 * t * t;
  return std::pow(t, r) / r + 0.5 - 1.0 / r;
}

inline double g_mixed_derivative(double t, double r) {
  if (t < 0.0) throw ValidationError("g_mixed requires t >= 0");
  if (t <= 1.0) return t;
  return std::pow(t, r - 1.0);
}

// g'(t) / t, bounded near zero.
inline double g_mixed_ratio(double t, double r) { return t <= 1.0 ? 1.0 : std::pow(t, r - 2.0); }

struct MaterialModel {
  double c1 = 1.0;
  double c2 = 1.0;
  double p = 2.0;
  double q = 2.0;

  // The density is C^2 on {dist(F, SO(2)) < 1, |det F - 1| < 1}.
  static constexpr double w4_neighborhood = 1.0;

  void validate() const {
    if (!(c1 > 0.0)) throw ValidationError("material.c1 must be positive");
    if (!(c2 > 0.0)) throw ValidationError("material.c2 must be positive");
    if (!(p > 1.0 && p <= 2.0)) throw ValidationError("material.p must lie in (1, 2]");
    if (!(q >= 1.0 && q <= 2.0)) throw ValidationError("material.q must lie in [1, 2]");
  }
};

// Conformal / anticonformal split of F - I. With F = [[a, b], [c, d]] the
// conformal part is (a+d)/2 I + (c-b)/2 J, so the distance to SO(2) only sees
// the modulus of that part. Working from G = F - I keeps small strains exact.
struct StrainSplit {
  double rho = 1.0;          // modulus of the conformal part
  double rho_minus_one = 0.0;
  double cos_psi = 1.0;      // closest rotation angle
  double sin_psi = 0.0;
  double r = 0.0;            // anticonformal components
  double s = 0.0;
  double det_minus_one = 0.0;

  double dist() const { return std::sqrt(2.0 * rho_minus_one * rho_minus_one + 2.0 * (r * r + s * s)); }
};

inline StrainSplit split_displacement_gradient(const Mat2& G) {
  StrainSplit out;
  const double a = 0.5 * (G(0, 0) + G(1, 1));
  const double q = 0.5 * (G(1, 0) - G(0, 1));
  out.r = 0.5 * (G(0, 0) - G(1, 1));
  out.s = 0.5 * (G(0, 1) + G(1, 0));
  const double pc = 1.0 + a;
  out.rho = std::hypot(pc, q);
  out.rho_minus_one = (a * (2.0 + a) + q * q) / (out.rho + 1.0);
  if (out.rho > 0.0) {
    out.cos_psi = pc / out.rho;
    out.sin_psi = q / out.rho;
  }
  out.det_minus_one = G.trace() + G.determinant();
  return out;
}

inline double dist_SO2(const Mat2& F) { return split_displacement_gradient(F - Mat2::Identity()).dist(); }

// Closest rotation in Frobenius norm (identity when F has no conformal part).
inline Mat2 closest_rotation(const Mat2& F) {
  const StrainSplit sp = split_displacement_gradient(F - Mat2::Identity());
  Mat2 R;
  R << sp.cos_psi, -sp.sin_psi, sp.sin_psi, sp.cos_psi;
  return R;
}

// W(I + G); +inf when det(I + G) <= 0.
inline double energy_density_displacement(const MaterialModel& m, const Mat2& G) {
  const StrainSplit sp = split_displacement_gradient(G);
  if (!(sp.det_minus_one > -1.0)) return kInfinity;
  return m.c1 * g_mixed(sp.dist(), m.p) + m.c2 * g_mixed(std::abs(sp.det_minus_one), m.q);
}

inline double energy_density(const MaterialModel& m, const Mat2& F) {
  return energy_density_displacement(m, F - Mat2::Identity());
}

inline Mat2 cofactor(const Mat2& F) {
  Mat2 c;
  c << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  return c;
}

// DW(I + G).
inline Mat2 stress_displacement(const MaterialModel& m, const Mat2& G) {
  const StrainSplit sp = split_displacement_gradient(G);
  if (!(sp.det_minus_one > -1.0)) throw ValidationError("stress requires det F > 0");
  // F - R* = (rho - 1) R_psi + [[r, s], [s, -r]]
  Mat2 diff;
  diff << sp.rho_minus_one * sp.cos_psi + sp.r, -sp.rho_minus_one * sp.sin_psi + sp.s,
      sp.rho_minus_one * sp.sin_psi + sp.s, sp.rho_minus_one * sp.cos_psi - sp.r;
  const double d = sp.dist();
  const double jm = sp.det_minus_one;
  const double sgn = jm > 0.0 ? 1.0 : (jm < 0.0 ? -1.0 : 0.0);
  return m.c1 * g_mixed_ratio(d, m.p) * diff +
         m.c2 * g_mixed_derivative(std::abs(jm), m.q) * sgn * cofactor(Mat2::Identity() + G);
}

inline Mat2 stress(const MaterialModel& m, const Mat2& F) { return stress_displacement(m, F - Mat2::Identity()); }

// D^2 W(I)[E, E].
inline double quadratic_form(const MaterialModel& m, const Mat2& E) {
  const Mat2 sym = 0.5 * (E + E.transpose());
  const double tr = E.trace();
  return m.c1 * sym.squaredNorm() + m.c2 * tr * tr;
}

// det(I + eps F) in two dimensions.
inline double det_expansion(const Mat2& F, double eps) { return 1.0 + eps * F.trace() + eps * eps * F.determinant(); }

}  // namespace liveload
