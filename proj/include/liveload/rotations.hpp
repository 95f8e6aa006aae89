#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "liveload/common.hpp"
#include "liveload/geometry.hpp"
#include "liveload/golden.hpp"
#include "liveload/parallel.hpp"
#include "liveload/pressure.hpp"

namespace liveload {

// Integral of pi(R^alpha x) over the mesh.
inline double rotation_functional(const InteriorSamples& s, const PressureField& pi, double alpha) {
  if (pi.identically_zero) return 0.0;
  const Mat2 R = rotation(alpha);
  CompensatedSum total;
  for (std::size_t i = 0; i < s.points.size(); ++i) total.add(s.weights[i] * pi(R * s.points[i]));
  return total.value();
}

inline double rotation_functional(const TriMesh& mesh, const PressureField& pi, double alpha,
                                  const QuadratureRule& rule = QuadratureRule::standard()) {
  return rotation_functional(interior_samples(mesh, rule), pi, alpha);
}

// Boundary form of the first variation: the integral over the boundary of
// pi(R x) (n . J x).
inline double el_residual(const BoundarySamples& s, const PressureField& pi, double alpha) {
  if (pi.identically_zero) return 0.0;
  const Mat2 R = rotation(alpha);
  CompensatedSum total;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const Vec2& x = s.points[i];
    total.add(s.weights[i] * pi(R * x) * s.normals[i].dot(perp(x)));
  }
  return total.value();
}

inline double el_residual(const TriMesh& mesh, const PressureField& pi, double alpha,
                          const QuadratureRule& rule = QuadratureRule::standard()) {
  return el_residual(boundary_samples(mesh, rule), pi, alpha);
}

// Volume form of the same first variation: grad pi(R x) . R J x over the mesh.
inline double el_residual_volume(const TriMesh& mesh, const PressureField& pi, double alpha,
                                 const QuadratureRule& rule = QuadratureRule::high_order()) {
  if (pi.identically_zero) return 0.0;
  const Mat2 R = rotation(alpha);
  return interior_integral(mesh, [&](const Vec2& x) { return pi.gradient(R * x).dot(R * perp(x)); }, rule);
}

// Boundary functional (grad pi(R x) . R A x)(A x . n) with A = a J.
inline double second_variation(const BoundarySamples& s, const PressureField& pi, double alpha, double a) {
  if (!pi.at_least_c2()) throw ValidationError("second variation needs a pressure of class C2");
  if (pi.identically_zero || a == 0.0) return 0.0;
  const Mat2 R = rotation(alpha);
  CompensatedSum total;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const Vec2 ax = a * perp(s.points[i]);
    total.add(s.weights[i] * pi.gradient(R * s.points[i]).dot(R * ax) * ax.dot(s.normals[i]));
  }
  return total.value();
}

inline double second_variation(const TriMesh& mesh, const PressureField& pi, double alpha, double a,
                               const QuadratureRule& rule = QuadratureRule::standard()) {
  return second_variation(boundary_samples(mesh, rule), pi, alpha, a);
}

// Reference magnitude for first/second variation tolerances:
// sup |pi| over rotated copies of the mesh times perimeter times max radius.
inline double rotation_scale(const TriMesh& mesh, const PressureField& pi) {
  if (pi.identically_zero) return 0.0;
  double sup = 0.0;
  const int n_angles = 64;
  for (int k = 0; k < n_angles; ++k) {
    const Mat2 R = rotation(kTwoPi * k / n_angles);
    for (const auto& x : mesh.nodes) sup = std::max(sup, std::abs(pi(R * x)));
  }
  return sup * mesh.perimeter() * mesh.max_radius();
}

// Counterclockwise arc [start, start + length] on the circle.
struct AngleArc {
  double start = 0.0;
  double length = 0.0;

  bool contains(double alpha) const { return normalize_angle(alpha - start) <= length; }
  double end() const { return start + length; }
  double midpoint() const { return normalize_angle(start + 0.5 * length); }
  bool full_circle() const { return length >= kTwoPi; }
};

struct OptimalSet {
  std::vector<double> isolated;  // angles in [0, 2pi)
  std::vector<AngleArc> arcs;
  double min_value = 0.0;
  double grid_tolerance = 0.0;

  bool empty() const { return isolated.empty() && arcs.empty(); }

  // Closest optimal angle to alpha.
  double nearest(double alpha) const {
    double best = alpha;
    double best_d = kInfinity;
    for (double a : isolated) {
      const double d = angular_distance(alpha, a);
      if (d < best_d) best_d = d, best = a;
    }
    for (const auto& arc : arcs) {
      if (arc.contains(alpha)) return normalize_angle(alpha);
      for (double a : {arc.start, arc.end()}) {
        const double d = angular_distance(alpha, a);
        if (d < best_d) best_d = d, best = normalize_angle(a);
      }
    }
    return best;
  }

  double distance(double alpha) const { return empty() ? kInfinity : angular_distance(alpha, nearest(alpha)); }

  // Isolated minima plus evenly spaced samples of each arc.
  std::vector<double> representatives(int per_arc = 9) const {
    std::vector<double> out = isolated;
    for (const auto& arc : arcs) {
      const int n = arc.full_circle() ? per_arc : std::max(per_arc, 2);
      for (int k = 0; k < n; ++k) {
        const double t = arc.full_circle() ? static_cast<double>(k) / n : static_cast<double>(k) / (n - 1);
        out.push_back(normalize_angle(arc.start + t * arc.length));
      }
    }
    return out;
  }
};

struct RotationSearchOptions {
  int grid = 1024;
  double refine_tol = 1e-10;
  double tie_rel_tol = 1e-9;
  int threads = 1;
};

namespace detail {

struct MinCandidate {
  double lo = 0.0;  // bracket, lo < hi, angles unwrapped
  double hi = 0.0;
  double x = 0.0;
  double fx = 0.0;
};

}  // namespace detail

// Grid scan, golden-section refinement of grid minima and merging of flat
// stretches into arcs. Isolated minima are reported as the midpoint of the
// local sublevel set {f <= min + tie}, which is robust when the functional
// is flat to high order at the minimum.
template <class F>
OptimalSet find_minimizing_angles(F&& f, const RotationSearchOptions& opt) {
  if (opt.grid < 64) throw ValidationError("rotation grid must have at least 64 points");
  const int n = opt.grid;
  const double h = kTwoPi / n;
  std::vector<double> values(n);
  parallel_for(static_cast<std::size_t>(n), opt.threads, [&](std::size_t i) { values[i] = f(h * i); });

  OptimalSet out;
  out.grid_tolerance = h;
  double fmin = *std::min_element(values.begin(), values.end());
  auto tie = [&](double m) { return opt.tie_rel_tol * (1.0 + std::abs(m)); };
  double thr = fmin + tie(fmin);
  std::vector<char> tied(n);
  for (int i = 0; i < n; ++i) tied[i] = values[i] <= thr;

  if (std::all_of(tied.begin(), tied.end(), [](char c) { return c != 0; })) {
    out.arcs.push_back({0.0, kTwoPi});
    out.min_value = fmin;
    return out;
  }

  const int first_untied = static_cast<int>(std::find(tied.begin(), tied.end(), 0) - tied.begin());
  std::vector<std::pair<int, int>> runs;  // (start index, length), indices may exceed n
  for (int k = 1; k <= n; ++k) {
    const int i = first_untied + k;
    if (!tied[i % n]) continue;
    if (tied[(i - 1) % n]) {
      ++runs.back().second;
    } else {
      runs.push_back({i, 1});
    }
  }

  // a tied run shorter than about 0.1 rad is a minimum that is flat to high
  // order, not an arc
  const int min_arc_points = std::max(3, n / 64);
  std::vector<detail::MinCandidate> candidates;
  std::vector<std::pair<int, int>> arc_runs;
  for (const auto& run : runs) {
    if (run.second >= min_arc_points) {
      arc_runs.push_back(run);
    } else {
      candidates.push_back({h * (run.first - 1), h * (run.first + run.second), 0.0, 0.0});
    }
  }
  // untied strict local minima of the grid may hide a lower minimum between nodes
  for (int i = 0; i < n; ++i) {
    if (tied[i]) continue;
    const double l = values[(i + n - 1) % n], r = values[(i + 1) % n];
    if (values[i] <= l && values[i] <= r && (values[i] < l || values[i] < r)) {
      candidates.push_back({h * (i - 1), h * (i + 1), 0.0, 0.0});
    }
  }
  for (auto& c : candidates) {
    const ScalarMin m = golden_section_minimize(f, c.lo, c.hi, opt.refine_tol);
    c.x = m.x;
    c.fx = m.fx;
    fmin = std::min(fmin, m.fx);
  }
  thr = fmin + tie(fmin);
  out.min_value = fmin;

  for (const auto& run : arc_runs) {
    const double a0 = h * run.first;
    const double a1 = h * (run.first + run.second - 1);
    if (f(a0) > thr) continue;
    const double lo = bisect_predicate([&](double a) { return f(a) <= thr; }, a0 - h, a0, opt.refine_tol);
    const double hi = bisect_predicate([&](double a) { return f(a) > thr; }, a1, a1 + h, opt.refine_tol);
    out.arcs.push_back({normalize_angle(lo), hi - lo});
  }

  for (const auto& c : candidates) {
    if (c.fx > thr) continue;
    const bool left_in = f(c.lo) <= thr;
    const bool right_in = f(c.hi) <= thr;
    const double lo =
        left_in ? c.lo : bisect_predicate([&](double a) { return f(a) <= thr; }, c.lo, c.x, opt.refine_tol);
    const double hi =
        right_in ? c.hi : bisect_predicate([&](double a) { return f(a) > thr; }, c.x, c.hi, opt.refine_tol);
    const double mid = normalize_angle(0.5 * (lo + hi));
    bool duplicate = false;
    for (double a : out.isolated) duplicate = duplicate || angular_distance(a, mid) < h;
    for (const auto& arc : out.arcs) duplicate = duplicate || arc.contains(mid);
    if (!duplicate) out.isolated.push_back(mid);
  }
  std::sort(out.isolated.begin(), out.isolated.end());
  return out;
}

inline OptimalSet find_optimal_rotations(const TriMesh& mesh, const PressureField& pi,
                                         const RotationSearchOptions& opt = {}) {
  if (pi.identically_zero) {
    if (opt.grid < 64) throw ValidationError("rotation grid must have at least 64 points");
    OptimalSet all;
    all.arcs.push_back({0.0, kTwoPi});
    all.grid_tolerance = kTwoPi / opt.grid;
    return all;
  }
  const InteriorSamples s = interior_samples(mesh);
  return find_minimizing_angles([&](double a) { return rotation_functional(s, pi, a); }, opt);
}

struct RotationScanRow {
  double alpha = 0.0;
  double value = 0.0;
  double el_residual = 0.0;
  double second_variation_unit = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<RotationScanRow> scan_rotations(const TriMesh& mesh, const PressureField& pi, int grid,
                                                   int threads = 1) {
  if (grid < 1) throw ValidationError("scan grid must be positive");
  const InteriorSamples is = interior_samples(mesh);
  const BoundarySamples bs = boundary_samples(mesh);
  std::vector<RotationScanRow> rows(grid);
  parallel_for(static_cast<std::size_t>(grid), threads, [&](std::size_t i) {
    RotationScanRow& r = rows[i];
    r.alpha = kTwoPi * static_cast<double>(i) / grid;
    r.value = rotation_functional(is, pi, r.alpha);
    r.el_residual = el_residual(bs, pi, r.alpha);
    if (pi.at_least_c2()) r.second_variation_unit = second_variation(bs, pi, r.alpha, 1.0);
  });
  return rows;
}

}  // namespace liveload
