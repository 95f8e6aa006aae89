#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "liveload/common.hpp"
#include "liveload/config.hpp"
#include "liveload/geometry.hpp"
#include "liveload/golden.hpp"
#include "liveload/linear.hpp"
#include "liveload/material.hpp"
#include "liveload/nonlinear.hpp"
#include "liveload/parallel.hpp"
#include "liveload/pressure.hpp"
#include "liveload/rotations.hpp"

namespace liveload {

// Rotation angle minimizing sum |T| g_p(|F_T - R^alpha|) for per-triangle
// gradients F_T = I + G_T. A coarse scan and golden-section search locate the
// minimum; when every distance is below one the objective is quadratic and the
// closed-form Procrustes angle is exact.
inline double extract_rotation_from_gradients(const std::vector<Mat2>& G, const std::vector<double>& areas, double p) {
  auto objective = [&](double a) {
    const Mat2 shift = Mat2::Identity() - rotation(a);
    CompensatedSum s;
    for (std::size_t t = 0; t < G.size(); ++t) s.add(areas[t] * g_mixed((G[t] + shift).norm(), p));
    return s.value();
  };
  Mat2 mean = Mat2::Zero();
  for (std::size_t t = 0; t < G.size(); ++t) mean += areas[t] * G[t];
  const double procrustes = std::atan2(mean(1, 0) - mean(0, 1), 2.0 * std::accumulate(areas.begin(), areas.end(), 0.0) +
                                                                    mean(0, 0) + mean(1, 1));
  auto all_quadratic = [&](double a) {
    const Mat2 shift = Mat2::Identity() - rotation(a);
    for (const auto& g : G) {
      if ((g + shift).norm() > 1.0) return false;
    }
    return true;
  };
  if (all_quadratic(procrustes)) return normalize_angle(procrustes);

  const int n = 360;
  int best = 0;
  double best_value = kInfinity;
  for (int k = 0; k < n; ++k) {
    const double v = objective(kTwoPi * k / n);
    if (v < best_value) best_value = v, best = k;
  }
  const double h = kTwoPi / n;
  const ScalarMin m = golden_section_minimize(objective, h * (best - 1), h * (best + 1), 1e-13);
  return normalize_angle(m.x);
}

// Extraction for plain nodal positions.
inline double extract_rotation(const TriMesh& mesh, const MaterialModel& m, const Vector& y) {
  const auto geo = element_geometry(mesh);
  const DeformationField f = DeformationField::from_positions(mesh, y);
  std::vector<Mat2> G(mesh.triangles.size());
  std::vector<double> areas(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    G[t] = element_gradient(mesh, geo[t], t, f.w);
    areas[t] = geo[t].area;
  }
  return extract_rotation_from_gradients(G, areas, m.p);
}

// Extraction for a frame-form deformation; the frame rotation factors out of
// |R_frame (I + G) - R^alpha|.
inline double extract_rotation(const TriMesh& mesh, const std::vector<ElementGeometry>& geo, const MaterialModel& m,
                               const DeformationField& y) {
  std::vector<Mat2> G(mesh.triangles.size());
  std::vector<double> areas(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    G[t] = element_gradient(mesh, geo[t], t, y.w);
    areas[t] = geo[t].area;
  }
  return normalize_angle(y.frame_angle + extract_rotation_from_gradients(G, areas, m.p));
}

inline double extract_rotation(const TriMesh& mesh, const MaterialModel& m, const DeformationField& y) {
  return extract_rotation(mesh, element_geometry(mesh), m, y);
}

inline Vector remove_mass_mean(const TriMesh& mesh, Vector u) {
  const Vec2 mean = mass_mean(mesh, u);
  for (int a = 0; a < mesh.num_nodes(); ++a) u.segment<2>(2 * a) -= mean;
  return u;
}

// u = (1/eps) R^{-alpha} (y - R^alpha x), with zero mass mean.
inline Vector rescaled_displacement(const TriMesh& mesh, const DeformationField& y, double alpha, double eps) {
  if (!(eps > 0.0)) throw ValidationError("rescaled displacement needs eps > 0");
  const Mat2 Rrel = rotation(y.frame_angle - alpha);
  const bool same_frame = y.frame_angle == alpha;
  Vector u(2 * mesh.num_nodes());
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    const Vec2 x = mesh.nodes[a];
    const Vec2 d = same_frame ? y.displacement(a) : Vec2(Rrel * (x + y.displacement(a)) - x);
    u.segment<2>(2 * a) = d / eps;
  }
  return remove_mass_mean(mesh, u);
}

inline Vector rescaled_displacement(const TriMesh& mesh, const Vector& y, double alpha, double eps) {
  return rescaled_displacement(mesh, DeformationField::from_positions(mesh, y), alpha, eps);
}

// Deformation R^alpha (x + eps u).
inline DeformationField compose_deformation(double alpha, const Vector& u, double eps) { return {alpha, eps * u}; }

// Discrete W^{1,p} norm: lumped L^p part plus the L^p norm of the gradient.
inline double w1p_norm(const TriMesh& mesh, const std::vector<ElementGeometry>& geo, const Vector& v, double p) {
  CompensatedSum s;
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    s.add(mesh.node_masses[a] * std::pow(Vec2(v[2 * a], v[2 * a + 1]).norm(), p));
  }
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    s.add(geo[t].area * std::pow(element_gradient(mesh, geo[t], t, v).norm(), p));
  }
  return std::pow(s.value(), 1.0 / p);
}

inline double continuum_area(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::disk: return kPi * d.radius * d.radius;
    case DomainKind::annulus: return kPi * (d.r_outer * d.r_outer - d.r_inner * d.r_inner);
    case DomainKind::four_lobe: return 0.5 * kPi * (d.r_inner * d.r_inner + d.r_outer * d.r_outer);
  }
  return 0.0;
}

struct LinearCandidate {
  double alpha0 = 0.0;
  double energy = 0.0;
  double rotation_load = 0.0;
  Vector u;
};

// Everything about one discretization that does not depend on eps.
struct StudyContext {
  int resolution = 0;
  TriMesh mesh;
  std::vector<ElementGeometry> geometry;
  MaterialModel material;
  PressureField pi;
  PressureField pi_hat;
  ExtensionRadii radii;
  OptimalSet optimal;
  double scale = 0.0;
  std::vector<LinearCandidate> linear;
  int best_linear = -1;

  const LinearCandidate& best() const { return linear.at(best_linear); }

  // Linear solution attached to the optimal angle closest to alpha.
  const LinearCandidate& nearest_linear(double alpha) const {
    const LinearCandidate* out = &linear.front();
    for (const auto& c : linear) {
      if (angular_distance(alpha, c.alpha0) < angular_distance(alpha, out->alpha0)) out = &c;
    }
    return *out;
  }
};

inline StudyContext build_context(const RunConfig& cfg, int resolution, bool with_linear = true) {
  StudyContext ctx;
  ctx.resolution = resolution;
  DomainSpec spec = cfg.domain;
  spec.resolution = resolution;
  ctx.mesh = build_domain(spec);
  ctx.geometry = element_geometry(ctx.mesh);
  ctx.material = cfg.material;
  ctx.pi = cfg.pressure.build();
  ctx.radii = default_extension_radii(ctx.mesh.min_radius(), ctx.mesh.max_radius(), ctx.mesh.contains_origin());
  ctx.pi_hat = extend_pressure(ctx.pi, ctx.radii, cfg.material.p, cfg.material.q);
  RotationSearchOptions ro;
  ro.grid = cfg.rotations.grid;
  ro.refine_tol = cfg.rotations.refine_tol;
  ro.threads = cfg.threads;
  ctx.optimal = find_optimal_rotations(ctx.mesh, ctx.pi, ro);
  ctx.scale = rotation_scale(ctx.mesh, ctx.pi);
  if (!with_linear) return ctx;

  LinearSolveOptions lo;
  lo.method = cfg.solver.linear_method;
  lo.tolerance = cfg.solver.linear_tol;
  lo.max_iterations = cfg.solver.linear_max_iter;
  for (double a0 : ctx.optimal.representatives(cfg.study.arc_samples)) {
    const LinearSystem sys = assemble_linear_system(ctx.mesh, ctx.material, ctx.pi, a0);
    const LinearSolution sol = solve_linearized(ctx.mesh, sys, Gauge::zero_skew_mean, lo);
    ctx.linear.push_back({a0, sol.energy, sol.rotation_load, sol.field.u});
  }
  for (int i = 0; i < static_cast<int>(ctx.linear.size()); ++i) {
    if (ctx.best_linear < 0 || ctx.linear[i].energy < ctx.linear[ctx.best_linear].energy) ctx.best_linear = i;
  }
  return ctx;
}

inline MinimizeOptions minimize_options(const RunConfig& cfg) {
  MinimizeOptions o;
  o.grad_tol = cfg.solver.grad_tol;
  o.max_iterations = cfg.solver.max_iter;
  o.memory = cfg.solver.lbfgs_memory;
  return o;
}

// Rigid start R^alpha (x + noise) with uniform, zero-mean nodal noise.
inline DeformationField noisy_start(const TriMesh& mesh, const EnergyAssembler& assembler, double alpha, double amplitude,
                                    std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector noise(2 * mesh.num_nodes());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = dist(rng);
  noise = remove_mass_mean(mesh, noise);
  double scale = amplitude;
  for (int k = 0; k < 60; ++k) {
    DeformationField f{alpha, scale * noise};
    if (assembler.min_det(f) > 0.0) return f;
    scale *= 0.5;
  }
  return DeformationField::rigid(mesh, alpha);
}

struct MultistartResult {
  DeformationField field;
  SolveDiagnostics diagnostics;
  int best_start = 0;
  std::vector<double> start_energies;
  std::vector<std::string> start_status;
};

// Independent minimizations from each configured angle; the lowest energy
// wins, the earliest start on ties.
inline MultistartResult multistart_minimize(const StudyContext& ctx, const RunConfig& cfg, double eps,
                                            std::uint64_t stream, int threads = 1) {
  const EnergyAssembler assembler(ctx.mesh, ctx.material, ctx.pi_hat, eps);
  const NonlinearMinimizer minimizer(assembler, minimize_options(cfg));
  const double amplitude = cfg.solver.noise * ctx.mesh.diameter();
  const std::size_t n = cfg.multistart.size();
  std::vector<std::pair<DeformationField, SolveDiagnostics>> runs(n);
  parallel_for(n, threads, [&](std::size_t k) {
    const DeformationField init =
        noisy_start(ctx.mesh, assembler, cfg.multistart[k], amplitude, cfg.seed, stream * 1000 + k);
    runs[k] = minimizer.minimize(init);
  });
  MultistartResult out;
  for (std::size_t k = 0; k < n; ++k) {
    out.start_energies.push_back(runs[k].second.final_energy);
    out.start_status.push_back(runs[k].second.status);
    if (k == 0 || runs[k].second.final_energy < runs[out.best_start].second.final_energy) {
      out.best_start = static_cast<int>(k);
    }
  }
  out.field = runs[out.best_start].first;
  out.diagnostics = runs[out.best_start].second;
  return out;
}

struct GammaRecord {
  double eps = 0.0;
  double energy = 0.0;
  double energy_over_eps2 = 0.0;
  double alpha = 0.0;
  double dist_to_R = 0.0;
  double det_dev_sq_over_eps2 = 0.0;
  double gp_over_eps2 = 0.0;
  double w1p_error = 0.0;           // |u_eps - u_0| in the discrete W^{1,p} norm
  double u_norm = 0.0;
  double nearest_optimal = 0.0;
  double a_eps = 0.0;
  double A0_scalar = 0.0;
  double F_value = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::string status;
  int best_start = 0;
  std::vector<double> start_energies;
  Vector u;  // rescaled displacement of the best run
};

struct ResolutionReport {
  int resolution = 0;
  int nodes = 0;
  int triangles = 0;
  double area = 0.0;
  OptimalSet optimal;
  double scale = 0.0;
  double min_E0 = 0.0;
  double alpha0 = 0.0;
  double u0_norm = 0.0;
  double rotation_load = 0.0;
  std::optional<double> closed_form_E0;
  double el_residual_at_alpha0 = 0.0;
  double F_at_alpha0 = std::numeric_limits<double>::quiet_NaN();
  std::vector<GammaRecord> records;
  // scaling summaries over the sweep
  double C_max = 0.0;
  double C_min = 0.0;
  // refined-limit summary
  double s_limit = 0.0;
  double A0_limit = 0.0;
  double F_limit = std::numeric_limits<double>::quiet_NaN();
  double F_tolerance = 0.0;
  bool A0_settled = true;
};

struct LambdaRecord {
  double eps = 0.0;
  double lambda = 0.0;
  double remainder = 0.0;             // (1/eps) (f(lambda) - f(alpha0))
  double remainder_over_target = 0.0; // remainder * eps / lambda^3
  double energy_over_eps2 = 0.0;      // of the constructed deformation
  double inf_over_eps2 = 0.0;         // best minimized energy
  double energy_gap = 0.0;
  double extracted_alpha = 0.0;
  double extracted_distance = 0.0;
  double distance_over_lambda = 0.0;
};

struct StudyReport {
  std::string kind;
  std::string config_hash;
  std::vector<ResolutionReport> resolutions;
  std::vector<LambdaRecord> lambda_records;  // lambda study, first resolution
  int lambda_resolution = 0;
  double lambda_exponent = 0.0;
};

inline std::optional<double> closed_form_constant_E0(const RunConfig& cfg) {
  if (cfg.pressure.name == "constant") {
    const double p0 = cfg.pressure.value;
    return -p0 * p0 * continuum_area(cfg.domain) / (cfg.material.c1 + 2.0 * cfg.material.c2);
  }
  if (cfg.pressure.name == "zero") return 0.0;
  return std::nullopt;
}

// Sweep over eps at one resolution: multistart minimization, extraction of
// (alpha_eps, u_eps) and the compactness diagnostics.
inline ResolutionReport sweep_resolution(const RunConfig& cfg, int resolution, bool refined) {
  const StudyContext ctx = build_context(cfg, resolution);
  ResolutionReport rep;
  rep.resolution = resolution;
  rep.nodes = ctx.mesh.num_nodes();
  rep.triangles = ctx.mesh.num_triangles();
  rep.area = ctx.mesh.area();
  rep.optimal = ctx.optimal;
  rep.scale = ctx.scale;
  rep.min_E0 = ctx.best().energy;
  rep.alpha0 = ctx.best().alpha0;
  rep.rotation_load = ctx.best().rotation_load;
  rep.u0_norm = w1p_norm(ctx.mesh, ctx.geometry, ctx.best().u, cfg.material.p);
  rep.closed_form_E0 = closed_form_constant_E0(cfg);
  rep.el_residual_at_alpha0 = el_residual(ctx.mesh, ctx.pi, rep.alpha0);
  if (ctx.pi.at_least_c2()) rep.F_at_alpha0 = second_variation(ctx.mesh, ctx.pi, rep.alpha0, 1.0);
  rep.F_tolerance = 1e-3 * ctx.scale;

  const std::size_t n = cfg.eps_list.size();
  std::vector<GammaRecord> records(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const double eps = cfg.eps_list[i];
    GammaRecord r;
    r.eps = eps;
    const MultistartResult best =
        multistart_minimize(ctx, cfg, eps, static_cast<std::uint64_t>(resolution) * 100 + i, 1);
    r.energy = best.diagnostics.final_energy;
    r.energy_over_eps2 = r.energy / (eps * eps);
    r.converged = best.diagnostics.converged;
    r.iterations = best.diagnostics.iterations;
    r.gradient_norm = best.diagnostics.gradient_norm;
    r.status = best.diagnostics.status;
    r.best_start = best.best_start;
    r.start_energies = best.start_energies;
    r.alpha = extract_rotation(ctx.mesh, ctx.geometry, ctx.material, best.field);
    r.dist_to_R = ctx.optimal.distance(r.alpha);
    r.u = rescaled_displacement(ctx.mesh, best.field, r.alpha, eps);
    r.u_norm = w1p_norm(ctx.mesh, ctx.geometry, r.u, cfg.material.p);
    const LinearCandidate& lin = ctx.nearest_linear(r.alpha);
    r.w1p_error = w1p_norm(ctx.mesh, ctx.geometry, r.u - lin.u, cfg.material.p);

    const EnergyAssembler assembler(ctx.mesh, ctx.material, ctx.pi_hat, eps);
    const auto parts = assembler.parts(best.field);
    r.det_dev_sq_over_eps2 = parts.det_dev_sq / (eps * eps);
    // eps grad u = R^{-alpha} grad y - I
    CompensatedSum gp;
    const Mat2 Rrel = rotation(best.field.frame_angle - r.alpha);
    for (int t = 0; t < ctx.mesh.num_triangles(); ++t) {
      const Mat2 G = element_gradient(ctx.mesh, ctx.geometry[t], t, best.field.w);
      const Mat2 D = Rrel * (Mat2::Identity() + G) - Mat2::Identity();
      gp.add(ctx.geometry[t].area * g_mixed(D.norm(), cfg.material.p));
    }
    r.gp_over_eps2 = gp.value() / (eps * eps);

    r.nearest_optimal = ctx.optimal.nearest(r.alpha);
    r.a_eps = wrap_signed(r.alpha - r.nearest_optimal);
    r.A0_scalar = r.a_eps / std::max(std::abs(r.a_eps), std::sqrt(eps));
    if (refined) r.F_value = second_variation(ctx.mesh, ctx.pi, r.nearest_optimal, r.A0_scalar);
    records[i] = std::move(r);
  });
  rep.records = std::move(records);

  rep.C_max = 0.0;
  rep.C_min = kInfinity;
  for (const auto& r : rep.records) {
    rep.C_max = std::max(rep.C_max, -r.energy_over_eps2);
    rep.C_min = std::min(rep.C_min, -r.energy_over_eps2);
  }
  if (refined && !rep.records.empty()) {
    const auto& last = rep.records.back();
    rep.s_limit = last.nearest_optimal;
    rep.A0_limit = last.A0_scalar;
    rep.F_limit = last.F_value;
    if (rep.records.size() >= 2) {
      rep.A0_settled = std::abs(rep.records[rep.records.size() - 2].A0_scalar - last.A0_scalar) <= 0.1;
    }
  }
  return rep;
}

inline StudyReport gamma_study(const RunConfig& cfg) {
  StudyReport rep;
  rep.kind = "gamma";
  rep.config_hash = config_hash(cfg);
  for (int res : cfg.study.resolutions) rep.resolutions.push_back(sweep_resolution(cfg, res, false));
  return rep;
}

inline StudyReport refined_study(const RunConfig& cfg) {
  if (!cfg.pressure.build().at_least_c2()) {
    throw ValidationError("refined study needs a pressure of class C2 (got '" + cfg.pressure.name + "')");
  }
  StudyReport rep;
  rep.kind = "refined";
  rep.config_hash = config_hash(cfg);
  for (int res : cfg.study.resolutions) rep.resolutions.push_back(sweep_resolution(cfg, res, true));
  return rep;
}

// Almost-minimizers R^lambda (x + eps u*) about the optimal rotation alpha0 = 0
// of the strict four-lobe example, with lambda = eps^r.
inline StudyReport lambda_study(const RunConfig& cfg) {
  if (cfg.pressure.name != "example52" || cfg.pressure.variant != ProfileVariant::strict) {
    throw ValidationError("lambda study requires the strict example52 pressure");
  }
  StudyReport rep;
  rep.kind = "lambda";
  rep.config_hash = config_hash(cfg);
  rep.lambda_exponent = cfg.study.lambda_exponent;
  const int res = cfg.study.resolutions.front();
  rep.lambda_resolution = res;
  const StudyContext ctx = build_context(cfg, res);
  const double alpha0 = 0.0;
  const LinearCandidate& lin = ctx.nearest_linear(alpha0);
  const InteriorSamples samples = interior_samples(ctx.mesh);
  const double f0 = rotation_functional(samples, ctx.pi, alpha0);

  const std::size_t n = cfg.eps_list.size();
  std::vector<LambdaRecord> records(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const double eps = cfg.eps_list[i];
    LambdaRecord r;
    r.eps = eps;
    r.lambda = std::pow(eps, cfg.study.lambda_exponent);
    r.remainder = (rotation_functional(samples, ctx.pi, alpha0 + r.lambda) - f0) / eps;
    r.remainder_over_target = r.remainder * eps / (r.lambda * r.lambda * r.lambda);
    const EnergyAssembler assembler(ctx.mesh, ctx.material, ctx.pi_hat, eps);
    const DeformationField y = compose_deformation(alpha0 + r.lambda, lin.u, eps);
    r.energy_over_eps2 = assembler.energy(y).energy / (eps * eps);
    const MultistartResult best = multistart_minimize(ctx, cfg, eps, static_cast<std::uint64_t>(res) * 100 + i, 1);
    r.inf_over_eps2 = std::min(best.diagnostics.final_energy, assembler.energy(y).energy) / (eps * eps);
    r.energy_gap = r.energy_over_eps2 - r.inf_over_eps2;
    r.extracted_alpha = extract_rotation(ctx.mesh, ctx.geometry, ctx.material, y);
    r.extracted_distance = ctx.optimal.distance(r.extracted_alpha);
    r.distance_over_lambda = r.extracted_distance / r.lambda;
    records[i] = r;
  });
  rep.lambda_records = std::move(records);
  return rep;
}

}  // namespace liveload
