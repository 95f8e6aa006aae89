#pragma once

// Reference computations for the tests. None of these call into the library
// code they are used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
constexpr double pi = 3.14159265358979323846;

inline Mat2 rot(double a) {
  Mat2 R;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

// min over theta of |F - R_theta| by a dense scan and local golden refinement.
inline double dist_to_rotations(const Mat2& F, int n = 20000) {
  auto f = [&](double t) { return (F - rot(t)).norm(); };
  double best_t = 0.0, best = f(0.0);
  for (int k = 1; k < n; ++k) {
    const double t = 2.0 * pi * k / n;
    if (f(t) < best) best = f(t), best_t = t;
  }
  double a = best_t - 2.0 * pi / n, b = best_t + 2.0 * pi / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) < f(d)) b = d; else a = c;
  }
  return std::min(best, f(0.5 * (a + b)));
}

inline double gmix(double t, double r) { return t <= 1.0 ? 0.5 * t * t : std::pow(t, r) / r + 0.5 - 1.0 / r; }

// The stored energy written out from its definition with the scan distance.
inline double energy(double c1, double c2, double p, double q, const Mat2& F) {
  const double J = F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
  if (J <= 0.0) return INFINITY;
  return c1 * gmix(dist_to_rotations(F), p) + c2 * gmix(std::abs(J - 1.0), q);
}

// Central difference gradient of a matrix function.
inline Mat2 fd_gradient(const std::function<double(const Mat2&)>& f, const Mat2& F, double h) {
  Mat2 G;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Mat2 P = F, M = F;
      P(i, j) += h;
      M(i, j) -= h;
      G(i, j) = (f(P) - f(M)) / (2.0 * h);
    }
  }
  return G;
}

// Composite Simpson rule.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (b <= a) return 0.0;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

// Angular densities of the two four-lobe profiles.
inline double dphi_strict(double t) {
  if (t <= 0.0 || t >= 0.5 * pi) return 0.0;
  return std::pow(t * (0.5 * pi - t), 3);
}

inline double dphi_flat(double t) {
  const double lo = 0.25 * pi, hi = 0.375 * pi, w = 0.5 * (hi - lo);
  if (t <= lo || t >= hi) return 0.0;
  return std::pow((t - lo) * (hi - t) / (w * w), 4);
}

// phi(a) for a in [0, pi/2] by quadrature of its density.
inline double phi(double a, bool flat) {
  a = std::clamp(a, 0.0, 0.5 * pi);
  if (flat) return simpson(dphi_flat, 0.25 * pi, std::min(a, 0.375 * pi), 20000);
  return simpson(dphi_strict, 0.0, a);
}

// Four-branch rotation profile of the four-lobe example over the full circle.
inline double rotation_profile(double alpha, bool flat) {
  double a = std::fmod(alpha, 2.0 * pi);
  if (a < 0.0) a += 2.0 * pi;
  const double top = phi(0.5 * pi, flat);
  if (a < 0.5 * pi) return phi(a, flat);
  if (a < pi) return top - phi(a - 0.5 * pi, flat);
  if (a < 1.5 * pi) return phi(a - pi, flat);
  return top - phi(a - 1.5 * pi, flat);
}

// Radial solution of the linearized problem with constant pressure p0 on
// the disk of radius R: minimize over f(r) (u = f(r) e_r)
//   pi int_0^R [c1 (f'^2 + f^2/r^2) + c2 (f' + f/r)^2] r dr + 2 pi R p0 f(R)
// with P1 elements on a uniform radial grid and a dense solve.
struct RadialSolution {
  std::vector<double> r, f;
  double energy = 0.0;

  double at(double rho) const {
    if (rho >= r.back()) return f.back();
    const auto it = std::upper_bound(r.begin(), r.end(), rho);
    const std::size_t k = static_cast<std::size_t>(it - r.begin()) - 1;
    const double t = (rho - r[k]) / (r[k + 1] - r[k]);
    return (1.0 - t) * f[k] + t * f[k + 1];
  }
};

inline RadialSolution radial_pressure_solution(double c1, double c2, double p0, double R, int n = 400) {
  const double h = R / n;
  // unknowns f_1..f_n (f_0 = 0)
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const double gx[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int e = 0; e < n; ++e) {
    const double r0 = e * h;
    for (double s : gx) {
      const double r = r0 + s * h;
      const double w = 0.5 * h * r;
      const double N[2] = {1.0 - s, s};
      const double dN[2] = {-1.0 / h, 1.0 / h};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const double v = c1 * (dN[i] * dN[j] + N[i] * N[j] / (r * r)) +
                           c2 * (dN[i] + N[i] / r) * (dN[j] + N[j] / r);
          const int I = e + i - 1, J = e + j - 1;
          if (I >= 0 && J >= 0) K(I, J) += 2.0 * pi * w * v;
        }
      }
    }
  }
  b[n - 1] = 2.0 * pi * R * p0;
  const Eigen::VectorXd f = K.ldlt().solve(-b);
  RadialSolution out;
  out.r.push_back(0.0);
  out.f.push_back(0.0);
  for (int k = 0; k < n; ++k) {
    out.r.push_back((k + 1) * h);
    out.f.push_back(f[k]);
  }
  out.energy = 0.5 * f.dot(K * f) + b.dot(f);
  return out;
}

// Argmin over a uniform grid.
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, double step) {
  double best = lo, best_v = f(lo);
  for (double a = lo + step; a <= hi; a += step) {
    const double v = f(a);
    if (v < best_v) best_v = v, best = a;
  }
  return best;
}

inline double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * pi);
  return std::min(d, 2.0 * pi - d);
}

}  // namespace oracle
