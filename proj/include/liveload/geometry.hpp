#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "liveload/common.hpp"

namespace liveload {

enum class DomainKind { disk, annulus, four_lobe };

inline std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::disk: return "disk";
    case DomainKind::annulus: return "annulus";
    case DomainKind::four_lobe: return "four_lobe";
  }
  return "unknown";
}

// Parametric reference domain. The four-lobe set has radius r_inner on the
// quadrants [0, pi/2] and [pi, 3pi/2] and radius r_outer on the other two.
struct DomainSpec {
  DomainKind kind = DomainKind::disk;
  double radius = 1.0;
  double r_inner = 1.0;
  double r_outer = 2.0;
  int resolution = 16;  // elements across a radius

  static DomainSpec disk(double radius, int resolution) {
    DomainSpec s;
    s.kind = DomainKind::disk;
    s.radius = radius;
    s.resolution = resolution;
    return s;
  }
  static DomainSpec annulus(double r_inner, double r_outer, int resolution) {
    DomainSpec s;
    s.kind = DomainKind::annulus;
    s.r_inner = r_inner;
    s.r_outer = r_outer;
    s.resolution = resolution;
    return s;
  }
  static DomainSpec four_lobe(int resolution, double r_small = 1.0, double r_large = 2.0) {
    DomainSpec s;
    s.kind = DomainKind::four_lobe;
    s.r_inner = r_small;
    s.r_outer = r_large;
    s.resolution = resolution;
    return s;
  }

  void validate() const {
    if (resolution < 2) throw ValidationError("domain.resolution must be at least 2");
    if (kind == DomainKind::disk) {
      if (!(radius > 0.0)) throw ValidationError("disk radius must be positive");
    } else {
      if (!(r_inner > 0.0) || !(r_outer > 0.0)) throw ValidationError("domain radii must be positive");
      if (!(r_inner < r_outer)) throw ValidationError("domain requires r_inner < r_outer");
    }
  }
};

struct BoundaryEdge {
  std::array<int, 2> nodes{};
  Vec2 normal = Vec2::Zero();  // unit, outward
  double length = 0.0;
};

struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<double> node_masses;  // lumped: area / 3 per incident triangle

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2 a = nodes[tri[1]] - nodes[tri[0]];
    const Vec2 b = nodes[tri[2]] - nodes[tri[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }

  Vec2 centroid(int t) const {
    const auto& tri = triangles[t];
    return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
  }

  double area() const {
    CompensatedSum s;
    for (int t = 0; t < num_triangles(); ++t) s.add(signed_area(t));
    return s.value();
  }

  double perimeter() const {
    CompensatedSum s;
    for (const auto& e : boundary_edges) s.add(e.length);
    return s.value();
  }

  double max_radius() const {
    double r = 0.0;
    for (const auto& x : nodes) r = std::max(r, x.norm());
    return r;
  }

  double min_radius() const {
    double r = kInfinity;
    for (const auto& x : nodes) r = std::min(r, x.norm());
    return r;
  }

  // Largest distance between boundary nodes.
  double diameter() const {
    std::vector<int> ids;
    ids.reserve(2 * boundary_edges.size());
    for (const auto& e : boundary_edges) ids.push_back(e.nodes[0]);
    double d2 = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        d2 = std::max(d2, (nodes[ids[i]] - nodes[ids[j]]).squaredNorm());
      }
    }
    return std::sqrt(d2);
  }

  // Whether the origin lies in the closure of the mesh (ball-type orbit set).
  bool contains_origin() const { return min_radius() < 1e-12 * (1.0 + max_radius()); }
};

inline std::vector<double> lumped_masses(const TriMesh& mesh) {
  std::vector<double> m(mesh.nodes.size(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.signed_area(t) / 3.0;
    for (int v : mesh.triangles[t]) m[v] += a;
  }
  return m;
}

// Lumped-mass weighted mean of the nodal coordinates.
inline Vec2 barycenter(const TriMesh& mesh) {
  CompensatedSum sx, sy, sm;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    sx.add(mesh.node_masses[i] * mesh.nodes[i].x());
    sy.add(mesh.node_masses[i] * mesh.nodes[i].y());
    sm.add(mesh.node_masses[i]);
  }
  return Vec2(sx.value(), sy.value()) / sm.value();
}

inline std::vector<BoundaryEdge> find_boundary_edges(const TriMesh& mesh) {
  // key: sorted node pair -> oriented occurrences
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edges;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}].push_back({a, b});
    }
  }
  std::vector<BoundaryEdge> out;
  for (const auto& [key, occ] : edges) {
    if (occ.size() != 1) continue;
    const auto [a, b] = occ.front();
    const Vec2 d = mesh.nodes[b] - mesh.nodes[a];
    BoundaryEdge e;
    e.nodes = {a, b};
    e.length = d.norm();
    e.normal = Vec2(d.y(), -d.x()) / e.length;  // right of a->b for CCW triangles
    out.push_back(e);
  }
  return out;
}

namespace detail {

struct Ring {
  double radius = 0.0;
  int count = 1;          // angular subdivisions (1 for the center point)
  std::vector<int> ids;   // node index per angular slot, -1 if absent
};

// Node count on a ring of the given radius so that arc spacing is close to h.
inline int ring_count(double radius, double h) {
  const long quarter = std::lround(0.5 * kPi * radius / h);
  return 4 * static_cast<int>(std::max(1L, quarter));
}

inline Vec2 ring_point(double radius, int j, int count) {
  // exact coordinates on the axes keep the quadrant structure symmetric
  const int quarter = count / 4;
  if (j % quarter == 0) {
    switch ((j / quarter) % 4) {
      case 0: return {radius, 0.0};
      case 1: return {0.0, radius};
      case 2: return {-radius, 0.0};
      default: return {0.0, -radius};
    }
  }
  const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(count);
  return {radius * std::cos(theta), radius * std::sin(theta)};
}

inline void add_triangle(TriMesh& mesh, int a, int b, int c) {
  std::array<int, 3> tri{a, b, c};
  mesh.triangles.push_back(tri);
  if (mesh.signed_area(mesh.num_triangles() - 1) < 0.0) std::swap(mesh.triangles.back()[1], mesh.triangles.back()[2]);
}

// Triangulates the strip between two rings over quadrant q by advancing along
// whichever ring has the next smaller angle.
inline void zip_quadrant(TriMesh& mesh, const Ring& inner, const Ring& outer, int q) {
  if (inner.count == 1) {
    const int center = inner.ids[0];
    const int qo = outer.count / 4;
    for (int j = q * qo; j < (q + 1) * qo; ++j) {
      add_triangle(mesh, center, outer.ids[j % outer.count], outer.ids[(j + 1) % outer.count]);
    }
    return;
  }
  const int qi = inner.count / 4;
  const int qo = outer.count / 4;
  int i = q * qi;
  int j = q * qo;
  const int i_end = (q + 1) * qi;
  const int j_end = (q + 1) * qo;
  while (i < i_end || j < j_end) {
    // compare angles (i+1)/inner.count and (j+1)/outer.count exactly
    const bool advance_inner =
        j == j_end || (i < i_end && static_cast<long>(i + 1) * outer.count <= static_cast<long>(j + 1) * inner.count);
    const int a = inner.ids[i % inner.count];
    const int b = outer.ids[j % outer.count];
    if (advance_inner) {
      add_triangle(mesh, a, inner.ids[(i + 1) % inner.count], b);
      ++i;
    } else {
      add_triangle(mesh, a, outer.ids[(j + 1) % outer.count], b);
      ++j;
    }
  }
}

}  // namespace detail

// Structured polar triangulation of the domain, translated so that its
// lumped-mass barycenter is the origin.
inline TriMesh build_domain(const DomainSpec& spec) {
  spec.validate();
  const int n = spec.resolution;

  std::vector<double> radii;
  std::array<int, 4> last_ring{};  // outermost ring index per quadrant
  double h = 0.0;
  switch (spec.kind) {
    case DomainKind::disk: {
      h = spec.radius / n;
      for (int k = 0; k <= n; ++k) radii.push_back(k == n ? spec.radius : k * h);
      last_ring.fill(n);
      break;
    }
    case DomainKind::annulus: {
      h = (spec.r_outer - spec.r_inner) / n;
      for (int k = 0; k <= n; ++k) radii.push_back(k == n ? spec.r_outer : spec.r_inner + k * h);
      last_ring.fill(n);
      break;
    }
    case DomainKind::four_lobe: {
      h = spec.r_inner / n;
      const int n_large = n + std::max(1, static_cast<int>(std::lround((spec.r_outer - spec.r_inner) / h)));
      const double h_large = (spec.r_outer - spec.r_inner) / (n_large - n);
      for (int k = 0; k <= n_large; ++k) {
        if (k <= n) {
          radii.push_back(k == n ? spec.r_inner : k * h);
        } else {
          radii.push_back(k == n_large ? spec.r_outer : spec.r_inner + (k - n) * h_large);
        }
      }
      last_ring = {n, n_large, n, n_large};
      break;
    }
  }

  TriMesh mesh;
  std::vector<detail::Ring> rings(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    auto& ring = rings[k];
    ring.radius = radii[k];
    ring.count = ring.radius == 0.0 ? 1 : detail::ring_count(ring.radius, h);
    ring.ids.assign(ring.count, -1);
    if (ring.count == 1) {
      ring.ids[0] = mesh.num_nodes();
      mesh.nodes.push_back(Vec2::Zero());
      continue;
    }
    const int quarter = ring.count / 4;
    for (int j = 0; j < ring.count; ++j) {
      bool present = false;
      for (int q = 0; q < 4 && !present; ++q) {
        if (last_ring[q] < static_cast<int>(k)) continue;
        // closed quadrant [q*quarter, (q+1)*quarter], slot count wraps to 0
        const int lo = q * quarter;
        const int hi = (q + 1) * quarter;
        present = (j >= lo && j <= hi) || (hi == ring.count && j == 0);
      }
      if (!present) continue;
      ring.ids[j] = mesh.num_nodes();
      mesh.nodes.push_back(detail::ring_point(ring.radius, j, ring.count));
    }
  }

  for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
    for (int q = 0; q < 4; ++q) {
      if (last_ring[q] >= static_cast<int>(k + 1)) detail::zip_quadrant(mesh, rings[k], rings[k + 1], q);
    }
  }

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!(mesh.signed_area(t) > 0.0)) throw SolverError("mesh generation produced a degenerate triangle");
  }

  mesh.node_masses = lumped_masses(mesh);
  const Vec2 b = barycenter(mesh);
  for (auto& x : mesh.nodes) x -= b;
  mesh.boundary_edges = find_boundary_edges(mesh);
  return mesh;
}

// Quadrature on the reference triangle (barycentric points, weights summing
// to one) and on the unit interval.
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

struct EdgeRule {
  std::vector<double> points;
  std::vector<double> weights;
};

struct QuadratureRule {
  TriangleRule interior;
  EdgeRule boundary;

  // 3-point interior rule (degree 2) and 2-point Gauss on edges (degree 3).
  static QuadratureRule standard() {
    QuadratureRule r;
    const double a = 2.0 / 3.0, b = 1.0 / 6.0;
    r.interior.points = {{a, b, b}, {b, a, b}, {b, b, a}};
    r.interior.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const double g = 0.5 / std::sqrt(3.0);
    r.boundary.points = {0.5 - g, 0.5 + g};
    r.boundary.weights = {0.5, 0.5};
    return r;
  }

  // 7-point interior rule (degree 5) and 5-point Gauss on edges (degree 9).
  static QuadratureRule high_order() {
    QuadratureRule r;
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, a2 = (6.0 + s15) / 21.0;
    const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
    r.interior.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                         {a1, a1, 1.0 - 2.0 * a1}, {a1, 1.0 - 2.0 * a1, a1}, {1.0 - 2.0 * a1, a1, a1},
                         {a2, a2, 1.0 - 2.0 * a2}, {a2, 1.0 - 2.0 * a2, a2}, {1.0 - 2.0 * a2, a2, a2}};
    r.interior.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    const double x1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double x2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double v0 = 128.0 / 225.0;
    const double v1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double v2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    r.boundary.points = {0.5 * (1.0 - x2), 0.5 * (1.0 - x1), 0.5, 0.5 * (1.0 + x1), 0.5 * (1.0 + x2)};
    r.boundary.weights = {0.5 * v2, 0.5 * v1, 0.5 * v0, 0.5 * v1, 0.5 * v2};
    return r;
  }
};

// Physical quadrature point of a triangle.
inline Vec2 triangle_point(const TriMesh& mesh, int t, const std::array<double, 3>& bary) {
  const auto& tri = mesh.triangles[t];
  return bary[0] * mesh.nodes[tri[0]] + bary[1] * mesh.nodes[tri[1]] + bary[2] * mesh.nodes[tri[2]];
}

// Sum over triangles of area * weighted samples of f(x).
template <class F>
double interior_integral(const TriMesh& mesh, F&& f, const QuadratureRule& rule = QuadratureRule::standard()) {
  CompensatedSum total;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.signed_area(t);
    double local = 0.0;
    for (std::size_t q = 0; q < rule.interior.weights.size(); ++q) {
      local += rule.interior.weights[q] * f(triangle_point(mesh, t, rule.interior.points[q]));
    }
    total.add(area * local);
  }
  return total.value();
}

// Sum over boundary edges of length * weighted samples of f(x, outward normal).
template <class F>
double boundary_integral(const TriMesh& mesh, F&& f, const QuadratureRule& rule = QuadratureRule::standard()) {
  CompensatedSum total;
  for (const auto& e : mesh.boundary_edges) {
    const Vec2& a = mesh.nodes[e.nodes[0]];
    const Vec2& b = mesh.nodes[e.nodes[1]];
    double local = 0.0;
    for (std::size_t q = 0; q < rule.boundary.weights.size(); ++q) {
      const double s = rule.boundary.points[q];
      local += rule.boundary.weights[q] * f(Vec2((1.0 - s) * a + s * b), e.normal);
    }
    total.add(e.length * local);
  }
  return total.value();
}

// Flattened quadrature points with absolute weights, reused across the many
// evaluations of a rotation scan.
struct InteriorSamples {
  std::vector<Vec2> points;
  std::vector<double> weights;
};

struct BoundarySamples {
  std::vector<Vec2> points;
  std::vector<Vec2> normals;
  std::vector<double> weights;
};

inline InteriorSamples interior_samples(const TriMesh& mesh, const QuadratureRule& rule = QuadratureRule::standard()) {
  InteriorSamples s;
  const std::size_t nq = rule.interior.weights.size();
  s.points.reserve(nq * mesh.triangles.size());
  s.weights.reserve(nq * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.signed_area(t);
    for (std::size_t q = 0; q < nq; ++q) {
      s.points.push_back(triangle_point(mesh, t, rule.interior.points[q]));
      s.weights.push_back(area * rule.interior.weights[q]);
    }
  }
  return s;
}

inline BoundarySamples boundary_samples(const TriMesh& mesh, const QuadratureRule& rule = QuadratureRule::standard()) {
  BoundarySamples s;
  for (const auto& e : mesh.boundary_edges) {
    const Vec2& a = mesh.nodes[e.nodes[0]];
    const Vec2& b = mesh.nodes[e.nodes[1]];
    for (std::size_t q = 0; q < rule.boundary.weights.size(); ++q) {
      const double t = rule.boundary.points[q];
      s.points.push_back((1.0 - t) * a + t * b);
      s.normals.push_back(e.normal);
      s.weights.push_back(e.length * rule.boundary.weights[q]);
    }
  }
  return s;
}

inline nlohmann::json mesh_to_json(const TriMesh& mesh) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& x : mesh.nodes) nodes.push_back({x.x(), x.y()});
  nlohmann::json tris = nlohmann::json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : mesh.boundary_edges) {
    edges.push_back({{"nodes", {e.nodes[0], e.nodes[1]}}, {"normal", {e.normal.x(), e.normal.y()}}, {"length", e.length}});
  }
  return {{"nodes", nodes}, {"triangles", tris}, {"boundary_edges", edges}};
}

}  // namespace liveload
