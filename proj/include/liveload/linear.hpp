#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/IterativeLinearSolvers>

#include "liveload/common.hpp"
#include "liveload/geometry.hpp"
#include "liveload/material.hpp"
#include "liveload/pressure.hpp"
#include "liveload/stiffness.hpp"

namespace liveload {

enum class Gauge { zero_skew_mean, none };
enum class LinearMethod { cg, direct };

inline LinearMethod parse_linear_method(const std::string& s) {
  if (s == "cg") return LinearMethod::cg;
  if (s == "direct") return LinearMethod::direct;
  throw ValidationError("unknown linear method '" + s + "' (expected cg or direct)");
}

struct DisplacementField {
  Vector u;  // interleaved nodal components
  Gauge gauge = Gauge::zero_skew_mean;

  Vec2 at(int node) const { return {u[2 * node], u[2 * node + 1]}; }
};

struct LinearSystem {
  SparseMatrix stiffness;
  Vector load;                 // boundary pressure term paired with each basis function
  Eigen::MatrixXd kernel;      // translations and J x
  Eigen::MatrixXd gauge;       // mean and skew-mean functionals
  std::vector<ElementGeometry> geometry;
  MaterialModel material;
  double alpha0 = 0.0;
};

inline Vector pressure_load(const TriMesh& mesh, const PressureField& pi, double alpha0,
                            const QuadratureRule& rule = QuadratureRule::standard()) {
  Vector b = Vector::Zero(2 * mesh.num_nodes());
  if (pi.identically_zero) return b;
  const Mat2 R = rotation(alpha0);
  for (const auto& e : mesh.boundary_edges) {
    const Vec2& xa = mesh.nodes[e.nodes[0]];
    const Vec2& xb = mesh.nodes[e.nodes[1]];
    for (std::size_t q = 0; q < rule.boundary.weights.size(); ++q) {
      const double s = rule.boundary.points[q];
      const double w = e.length * rule.boundary.weights[q] * pi(R * ((1.0 - s) * xa + s * xb));
      for (int i = 0; i < 2; ++i) {
        b[2 * e.nodes[0] + i] += w * (1.0 - s) * e.normal[i];
        b[2 * e.nodes[1] + i] += w * s * e.normal[i];
      }
    }
  }
  return b;
}

inline LinearSystem assemble_linear_system(const TriMesh& mesh, const MaterialModel& m, const PressureField& pi,
                                           double alpha0) {
  m.validate();
  LinearSystem sys;
  sys.geometry = element_geometry(mesh);
  sys.stiffness = assemble_stiffness(mesh, sys.geometry, m);
  sys.load = pressure_load(mesh, pi, alpha0);
  sys.kernel = rigid_modes(mesh);
  sys.gauge = gauge_constraints(mesh, sys.geometry);
  sys.material = m;
  sys.alpha0 = alpha0;
  return sys;
}

// 1/2 u^T K u + b^T u.
inline double linear_energy(const LinearSystem& sys, const Vector& u) {
  return 0.5 * u.dot(sys.stiffness * u) + sys.load.dot(u);
}

// Element-wise 1/2 sum |T| Q(grad u), independent of the assembled matrix.
inline double elastic_energy_elementwise(const TriMesh& mesh, const LinearSystem& sys, const Vector& u) {
  CompensatedSum s;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    s.add(0.5 * sys.geometry[t].area * quadratic_form(sys.material, element_gradient(mesh, sys.geometry[t], t, u)));
  }
  return s.value();
}

// Integral of skew(grad u)_{10} = (d1 u2 - d2 u1) / 2.
inline double skew_integral(const LinearSystem& sys, const Vector& u) { return sys.gauge.col(2).dot(u); }

inline Vec2 mass_mean(const TriMesh& mesh, const Vector& u) {
  CompensatedSum sx, sy, sm;
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    sx.add(mesh.node_masses[a] * u[2 * a]);
    sy.add(mesh.node_masses[a] * u[2 * a + 1]);
    sm.add(mesh.node_masses[a]);
  }
  return Vec2(sx.value(), sy.value()) / sm.value();
}

// Removes the mass mean and, for zero_skew_mean, the mean infinitesimal rotation.
inline void apply_gauge(const TriMesh& mesh, const LinearSystem& sys, Vector& u, Gauge gauge) {
  const Vec2 mean = mass_mean(mesh, u);
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    u[2 * a] -= mean.x();
    u[2 * a + 1] -= mean.y();
  }
  if (gauge == Gauge::zero_skew_mean) {
    const double area = mesh.area();
    const double a = skew_integral(sys, u) / area;
    u -= a * sys.kernel.col(2);
  }
}

struct LinearSolveOptions {
  LinearMethod method = LinearMethod::cg;
  double tolerance = 1e-10;
  int max_iterations = 20000;
};

struct LinearSolution {
  DisplacementField field;
  double energy = 0.0;
  double rotation_load = 0.0;     // load paired with J x, equal to the first-variation residual
  int iterations = 0;
  double relative_residual = 0.0;
  std::string method;
};

// Minimizes 1/2 u^T K u + b^T u over zero-mean displacements. The load is
// first balanced against translations (the zero-mean constraint absorbs the
// net force), then its rotation component is measured and removed.
inline LinearSolution solve_linearized(const TriMesh& mesh, const LinearSystem& sys, Gauge gauge = Gauge::zero_skew_mean,
                                       const LinearSolveOptions& opt = {}) {
  const int n = mesh.num_nodes();
  LinearSolution out;
  out.field.gauge = gauge;

  Vector b = sys.load;
  const double area = mesh.area();
  const Vec2 net(sys.kernel.col(0).dot(b), sys.kernel.col(1).dot(b));
  for (int a = 0; a < n; ++a) {
    b[2 * a] -= mesh.node_masses[a] * net.x() / area;
    b[2 * a + 1] -= mesh.node_masses[a] * net.y() / area;
  }
  const Vector r = sys.kernel.col(2);
  out.rotation_load = r.dot(b);
  Vector w(2 * n);
  for (int a = 0; a < n; ++a) {
    const Vec2 jx = perp(mesh.nodes[a]);
    w[2 * a] = mesh.node_masses[a] * jx.x();
    w[2 * a + 1] = mesh.node_masses[a] * jx.y();
  }
  b -= w * (out.rotation_load / r.dot(w));

  if (b.norm() == 0.0) {
    out.field.u = Vector::Zero(2 * n);
    out.method = opt.method == LinearMethod::cg ? "cg" : "direct";
    return out;
  }

  if (opt.method == LinearMethod::cg) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(opt.tolerance);
    cg.setMaxIterations(opt.max_iterations);
    cg.compute(sys.stiffness);
    out.field.u = cg.solve(-b);
    out.iterations = static_cast<int>(cg.iterations());
    out.relative_residual = cg.error();
    out.method = "cg";
    if (cg.info() != Eigen::Success || !(out.relative_residual <= opt.tolerance)) {
      throw SolverError("conjugate gradient did not converge within " + std::to_string(opt.max_iterations) +
                        " iterations");
    }
  } else {
    // the gauge functionals are imposed directly; the translation and
    // rotation components of b were already removed so the multiplier is zero
    ConstrainedStiffnessSolver direct(mesh, sys.stiffness, sys.kernel, sys.gauge);
    out.field.u = direct.solve(-b);
    out.method = "direct";
    out.relative_residual = (sys.stiffness * out.field.u + b).norm() / b.norm();
  }
  apply_gauge(mesh, sys, out.field.u, gauge);
  out.energy = linear_energy(sys, out.field.u);
  return out;
}

// Boundary and volume forms of the pressure pairing with u:
// the boundary integral of pi(R0 x) n . u, and the integral of
// div(pi(R0 x) u) = grad pi(R0 x) . R0 u + pi(R0 x) div u.
inline std::pair<double, double> divergence_form_check(const TriMesh& mesh, const PressureField& pi, double alpha0,
                                                       const Vector& u,
                                                       const QuadratureRule& rule = QuadratureRule::high_order()) {
  const Mat2 R = rotation(alpha0);
  const auto geo = element_geometry(mesh);
  CompensatedSum boundary;
  for (const auto& e : mesh.boundary_edges) {
    const Vec2& xa = mesh.nodes[e.nodes[0]];
    const Vec2& xb = mesh.nodes[e.nodes[1]];
    const Vec2 ua(u[2 * e.nodes[0]], u[2 * e.nodes[0] + 1]);
    const Vec2 ub(u[2 * e.nodes[1]], u[2 * e.nodes[1] + 1]);
    for (std::size_t q = 0; q < rule.boundary.weights.size(); ++q) {
      const double s = rule.boundary.points[q];
      const Vec2 x = (1.0 - s) * xa + s * xb;
      const Vec2 uq = (1.0 - s) * ua + s * ub;
      boundary.add(e.length * rule.boundary.weights[q] * pi(R * x) * e.normal.dot(uq));
    }
  }
  CompensatedSum volume;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double div = element_gradient(mesh, geo[t], t, u).trace();
    for (std::size_t q = 0; q < rule.interior.weights.size(); ++q) {
      const auto& bc = rule.interior.points[q];
      Vec2 x = Vec2::Zero(), uq = Vec2::Zero();
      for (int k = 0; k < 3; ++k) {
        x += bc[k] * mesh.nodes[tri[k]];
        uq += bc[k] * Vec2(u[2 * tri[k]], u[2 * tri[k] + 1]);
      }
      const Vec2 y = R * x;
      volume.add(geo[t].area * rule.interior.weights[q] * (pi.gradient(y).dot(R * uq) + pi(y) * div));
    }
  }
  return {boundary.value(), volume.value()};
}

}  // namespace liveload
