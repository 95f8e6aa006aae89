#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liveload/config.hpp"
#include "liveload/geometry.hpp"
#include "liveload/harness.hpp"
#include "liveload/linear.hpp"
#include "liveload/material.hpp"
#include "liveload/nonlinear.hpp"
#include "liveload/pressure.hpp"
#include "liveload/rotations.hpp"

namespace liveload {

struct SelfCheck {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline void self_check(std::vector<SelfCheck>& out, const std::string& module, const std::string& name,
                       const std::function<bool(std::string&)>& body) {
  SelfCheck c{module, name, false, {}};
  try {
    c.passed = body(c.detail);
  } catch (const std::exception& e) {
    c.detail = std::string("threw: ") + e.what();
  }
  out.push_back(c);
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace detail

// Quick sanity examples for each module, all with exact or near-exact answers.
inline std::vector<SelfCheck> run_selftest() {
  using detail::close;
  using detail::self_check;
  std::vector<SelfCheck> out;

  const TriMesh disk = build_domain(DomainSpec::disk(1.0, 8));
  const TriMesh lobes = build_domain(DomainSpec::four_lobe(8));

  self_check(out, "geometry", "four-lobe mesh is centred", [&](std::string& d) {
    const double b = barycenter(lobes).norm();
    d = "barycenter norm " + std::to_string(b);
    return b <= 1e-12 * lobes.diameter();
  });
  self_check(out, "geometry", "barycenter follows translation", [&](std::string&) {
    TriMesh moved = disk;
    const Vec2 t(0.3, -1.7);
    for (auto& x : moved.nodes) x += t;
    return (barycenter(moved) - barycenter(disk) - t).norm() <= 1e-12;
  });
  self_check(out, "geometry", "zero boundary integrand", [&](std::string&) {
    return boundary_integral(disk, [](const Vec2&, const Vec2&) { return 0.0; }) == 0.0;
  });

  const MaterialModel mat{1.0, 1.0, 2.0, 2.0};
  self_check(out, "material", "g_mixed at 0 and 1", [&](std::string&) {
    return g_mixed(0.0, 1.5) == 0.0 && close(g_mixed(1.0, 1.5), 0.5, 1e-15) && close(g_mixed(1.0, 2.0), 0.5, 1e-15);
  });
  self_check(out, "material", "rotations are stress free", [&](std::string&) {
    const Mat2 R = rotation(0.7);
    return dist_SO2(R) <= 1e-15 && energy_density(mat, Mat2::Identity()) == 0.0 &&
           stress(mat, Mat2::Identity()).norm() == 0.0 && stress(mat, R).norm() <= 1e-14;
  });
  self_check(out, "material", "skew strain has zero quadratic form", [&](std::string&) {
    return quadratic_form(mat, rotation_generator()) == 0.0;
  });
  self_check(out, "material", "determinant expansion", [&](std::string&) {
    return det_expansion(Mat2::Zero(), 0.4) == 1.0 && close(det_expansion(Mat2::Identity(), 0.1), 1.21, 1e-15);
  });

  self_check(out, "pressure", "builtin fields", [&](std::string&) {
    const PressureField z = zero_pressure();
    const PressureField h = hydrostatic_pressure(1.0);
    const PressureField c = constant_pressure(0.25);
    const Vec2 y(0.3, -2.0);
    return z(y) == 0.0 && z.gradient(y).norm() == 0.0 && h(y) == 2.0 && h(Vec2(0.3, 2.0)) == 0.0 && c(y) == 0.25 &&
           c.gradient(y).norm() == 0.0;
  });
  self_check(out, "pressure", "growth of bounded negative parts", [&](std::string& d) {
    const GrowthReport nonneg = validate_growth(constant_pressure(1.0), 2.0, 2.0);
    const GrowthReport neg = validate_growth(constant_pressure(-3.0), 2.0, 1.0);
    d = "C = " + std::to_string(neg.constant);
    return nonneg.passed && nonneg.constant == 0.0 && neg.passed && close(neg.constant, 3.0, 1e-12);
  });

  const PressureField strict = example52_pressure(ExampleProfile(ProfileVariant::strict));
  self_check(out, "rotations", "zero field", [&](std::string&) {
    const OptimalSet s = find_optimal_rotations(disk, zero_pressure(), {});
    return rotation_functional(disk, zero_pressure(), 1.1) == 0.0 && s.arcs.size() == 1 && s.arcs[0].full_circle() &&
           s.isolated.empty();
  });
  self_check(out, "rotations", "constant field has no rotation residual", [&](std::string& d) {
    const double r = el_residual(lobes, constant_pressure(1.0), 0.3);
    d = "residual " + std::to_string(r);
    return std::abs(r) <= 1e-12;
  });
  self_check(out, "rotations", "second variation is quadratic", [&](std::string&) {
    const double f1 = second_variation(lobes, strict, 0.4, 1.0);
    const double f3 = second_variation(lobes, strict, 0.4, 3.0);
    return second_variation(lobes, strict, 0.4, 0.0) == 0.0 && close(f3, 9.0 * f1, 1e-12 * (1.0 + std::abs(f3)));
  });

  self_check(out, "nonlinear_solver", "rigid motions about an optimal angle", [&](std::string& d) {
    const EnergyAssembler a(lobes, mat, strict, 0.05);
    const double e0 = a.energy(DeformationField::identity(lobes)).energy;
    const double er = a.energy(DeformationField::rigid(lobes, 0.0)).energy;
    d = "energies " + std::to_string(e0) + " " + std::to_string(er);
    return e0 == 0.0 && er == 0.0;
  });
  self_check(out, "nonlinear_solver", "zero gradient at the identity", [&](std::string&) {
    const Vector y = DeformationField::identity(disk).nodal_positions(disk);
    return assemble_gradient(disk, mat, zero_pressure(), y, 0.1).norm() == 0.0;
  });
  self_check(out, "nonlinear_solver", "relaxes to a rigid motion without load", [&](std::string& d) {
    const EnergyAssembler a(disk, mat, zero_pressure(), 0.1);
    const DeformationField init = noisy_start(disk, a, 0.0, 1e-3, 7, 0);
    MinimizeOptions o;
    o.grad_tol = 1e-12;
    const auto [y, diag] = NonlinearMinimizer(a, o).minimize(init);
    d = "final energy " + std::to_string(diag.final_energy);
    return diag.final_energy <= 1e-12;
  });

  self_check(out, "linear_solver", "zero load and skew kernel", [&](std::string&) {
    const LinearSystem sys = assemble_linear_system(disk, mat, zero_pressure(), 0.0);
    const LinearSolution sol = solve_linearized(disk, sys);
    Vector skew(2 * disk.num_nodes());
    for (int a = 0; a < disk.num_nodes(); ++a) skew.segment<2>(2 * a) = perp(disk.nodes[a]);
    return sys.load.norm() == 0.0 && sol.field.u.norm() == 0.0 && sol.energy == 0.0 &&
           std::abs(skew.dot(sys.stiffness * skew)) <= 1e-12;
  });
  self_check(out, "linear_solver", "constant field, translation", [&](std::string&) {
    Vector u(2 * disk.num_nodes());
    for (int a = 0; a < disk.num_nodes(); ++a) u.segment<2>(2 * a) = Vec2(0.4, -0.2);
    const auto [b, v] = divergence_form_check(disk, constant_pressure(1.0), 0.0, u);
    return std::abs(b) <= 1e-12 && std::abs(v) <= 1e-12;
  });

  self_check(out, "gamma_harness", "rigid deformation round trip", [&](std::string&) {
    const double alpha = 1.3;
    const DeformationField y = DeformationField::rigid(lobes, alpha);
    const double extracted = extract_rotation(lobes, mat, y);
    const Vector u = rescaled_displacement(lobes, y, alpha, 0.01);
    return angular_distance(extracted, alpha) <= 1e-12 && u.norm() <= 1e-12;
  });
  self_check(out, "gamma_harness", "rescaled displacement inverts composition", [&](std::string&) {
    Vector v(2 * lobes.num_nodes());
    for (int a = 0; a < lobes.num_nodes(); ++a) {
      const Vec2 x = lobes.nodes[a];
      v.segment<2>(2 * a) = Vec2(std::sin(x.y()), x.x() * x.y());
    }
    v = remove_mass_mean(lobes, v);
    const Vector back = rescaled_displacement(lobes, compose_deformation(0.6, v, 0.01), 0.6, 0.01);
    return (back - v).lpNorm<Eigen::Infinity>() <= 1e-12;
  });

  self_check(out, "cli_io", "missing material key is named", [&](std::string& d) {
    json cfg = {{"domain", {{"kind", "disk"}, {"resolution", 8}}},
                {"material", {{"c1", 1.0}, {"c2", 1.0}, {"q", 2.0}}},
                {"pressure", {{"name", "zero"}}}};
    try {
      parse_config(cfg);
    } catch (const ValidationError& e) {
      d = e.what();
      return d.find("material.p") != std::string::npos;
    }
    return false;
  });
  return out;
}

}  // namespace liveload
