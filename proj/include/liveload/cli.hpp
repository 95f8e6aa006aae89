#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "liveload/config.hpp"
#include "liveload/harness.hpp"
#include "liveload/linear.hpp"
#include "liveload/parallel.hpp"
#include "liveload/report_io.hpp"
#include "liveload/rotations.hpp"
#include "liveload/selftest.hpp"

namespace liveload {

enum ExitCode { kExitOk = 0, kExitInternal = 1, kExitValidation = 2, kExitSolver = 3 };

struct CliOptions {
  std::string command;
  std::string config;
  std::string out;
  std::string csv;
  std::string svg;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::string alpha0 = "auto";
  std::optional<double> eps;
};

namespace detail {

inline RunConfig cli_config(const CliOptions& o) {
  RunConfig cfg = load_config(o.config);
  if (o.threads) {
    if (*o.threads < 0) throw ValidationError("--threads must be nonnegative");
    cfg.threads = *o.threads;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output.json = o.out;
  if (!o.csv.empty()) cfg.output.csv = o.csv;
  if (!o.svg.empty()) cfg.output.svg = o.svg;
  return cfg;
}

inline json envelope(const std::string& kind, const RunConfig& cfg) {
  return {{"kind", kind}, {"config_hash", config_hash(cfg)}, {"config", config_to_json(cfg)}};
}

inline void emit_json(const std::string& path, json doc, const std::string& command, const RunConfig& cfg) {
  doc["metadata"] = run_metadata(command, resolve_threads(cfg.threads));
  validate_output_json(doc);
  if (path.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json(path, doc);
  }
}

inline std::string with_extension(const std::string& path, const std::string& ext) {
  return std::filesystem::path(path).replace_extension(ext).string();
}

inline int run_scan(const CliOptions& o) {
  RunConfig cfg = cli_config(o);
  const int grid = o.grid.value_or(cfg.rotations.grid);
  if (grid < 64) throw ValidationError("--grid must be at least 64");
  cfg.rotations.grid = grid;
  // --out names the CSV table here; the JSON and the polar plot go alongside
  std::string csv = cfg.output.csv, json_path = cfg.output.json, svg = cfg.output.svg;
  if (!json_path.empty() && std::filesystem::path(json_path).extension() == ".csv") {
    csv = json_path;
    json_path = with_extension(csv, ".json");
    if (svg.empty()) svg = with_extension(csv, ".svg");
  }
  const TriMesh mesh = build_domain(cfg.domain);
  const PressureField pi = cfg.pressure.build();
  const auto rows = scan_rotations(mesh, pi, grid, cfg.threads);
  RotationSearchOptions ro;
  ro.grid = grid;
  ro.refine_tol = cfg.rotations.refine_tol;
  ro.threads = cfg.threads;
  const OptimalSet optimal = find_optimal_rotations(mesh, pi, ro);

  json doc = envelope("scan-rotations", cfg);
  doc["grid"] = grid;
  doc["optimal_set"] = optimal_set_to_json(optimal);
  doc["scale"] = rotation_scale(mesh, pi);
  json jr = json::array();
  for (const auto& r : rows) {
    jr.push_back({{"alpha", r.alpha},
                  {"functional_value", r.value},
                  {"el_residual", r.el_residual},
                  {"second_variation_unit", std::isnan(r.second_variation_unit) ? json(nullptr)
                                                                                : json(r.second_variation_unit)}});
  }
  doc["rows"] = jr;
  emit_json(json_path, doc, o.command, cfg);
  if (!csv.empty()) write_text(csv, scan_csv(rows));
  if (!svg.empty()) write_text(svg, scan_svg(rows));
  return kExitOk;
}

inline int run_linear(const CliOptions& o) {
  const RunConfig cfg = cli_config(o);
  const TriMesh mesh = build_domain(cfg.domain);
  const PressureField pi = cfg.pressure.build();
  double alpha0 = 0.0;
  if (o.alpha0 == "auto") {
    RotationSearchOptions ro;
    ro.grid = cfg.rotations.grid;
    ro.refine_tol = cfg.rotations.refine_tol;
    ro.threads = cfg.threads;
    const OptimalSet optimal = find_optimal_rotations(mesh, pi, ro);
    alpha0 = optimal.representatives(cfg.study.arc_samples).front();
  } else {
    try {
      std::size_t used = 0;
      alpha0 = std::stod(o.alpha0, &used);
      if (used != o.alpha0.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ValidationError("--alpha0 must be a number or 'auto' (got '" + o.alpha0 + "')");
    }
  }
  LinearSolveOptions lo;
  lo.method = cfg.solver.linear_method;
  lo.tolerance = cfg.solver.linear_tol;
  lo.max_iterations = cfg.solver.linear_max_iter;
  const LinearSystem sys = assemble_linear_system(mesh, cfg.material, pi, alpha0);
  const LinearSolution sol = solve_linearized(mesh, sys, Gauge::zero_skew_mean, lo);

  json doc = envelope("solve-linear", cfg);
  doc["alpha0"] = alpha0;
  doc["energy"] = sol.energy;
  doc["rotation_load"] = sol.rotation_load;
  doc["method"] = sol.method;
  doc["iterations"] = sol.iterations;
  doc["relative_residual"] = sol.relative_residual;
  doc["nodes"] = mesh.num_nodes();
  doc["u"] = vector_to_json(sol.field.u);
  emit_json(cfg.output.json, doc, o.command, cfg);
  return kExitOk;
}

inline int run_nonlinear(const CliOptions& o) {
  const RunConfig cfg = cli_config(o);
  if (!o.eps) throw ValidationError("solve-nonlinear needs --eps");
  const double eps = *o.eps;
  if (!(eps > 0.0)) throw ValidationError("--eps must be positive");
  const StudyContext ctx = build_context(cfg, cfg.domain.resolution, false);
  const MultistartResult best = multistart_minimize(ctx, cfg, eps, 0, cfg.threads);
  const double alpha = extract_rotation(ctx.mesh, ctx.geometry, ctx.material, best.field);
  const Vector u = rescaled_displacement(ctx.mesh, best.field, alpha, eps);

  const SolveDiagnostics& d = best.diagnostics;
  json doc = envelope("solve-nonlinear", cfg);
  doc["eps"] = eps;
  doc["diagnostics"] = {{"final_energy", d.final_energy},
                        {"energy_over_eps2", d.final_energy / (eps * eps)},
                        {"gradient_norm", d.gradient_norm},
                        {"iterations", d.iterations},
                        {"backtracks", d.backtracks},
                        {"admissibility_violations", d.admissibility_violations},
                        {"converged", d.converged},
                        {"status", d.status},
                        {"best_start", best.best_start},
                        {"start_energies", best.start_energies},
                        {"start_status", best.start_status}};
  doc["frame_angle"] = best.field.frame_angle;
  doc["y"] = vector_to_json(best.field.nodal_positions(ctx.mesh));
  doc["alpha"] = alpha;
  doc["dist_to_optimal"] = ctx.optimal.distance(alpha);
  doc["optimal_set"] = optimal_set_to_json(ctx.optimal);
  doc["u"] = vector_to_json(u);
  emit_json(cfg.output.json, doc, o.command, cfg);
  return kExitOk;
}

inline int run_study(const CliOptions& o) {
  const RunConfig cfg = cli_config(o);
  StudyReport rep;
  if (o.command == "gamma-study") {
    rep = gamma_study(cfg);
  } else if (o.command == "refined-study") {
    rep = refined_study(cfg);
  } else {
    rep = lambda_study(cfg);
  }
  emit_json(cfg.output.json, report_to_json(rep, cfg), o.command, cfg);
  if (!cfg.output.csv.empty()) write_text(cfg.output.csv, study_csv(rep));
  if (!cfg.output.svg.empty()) write_text(cfg.output.svg, study_svg(rep));
  return kExitOk;
}

inline int run_selftest_command(const CliOptions& o) {
  const auto checks = run_selftest();
  int failed = 0;
  json jc = json::array();
  for (const auto& c : checks) {
    std::cerr << (c.passed ? "ok    " : "FAIL  ") << c.module << ": " << c.name
              << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
    jc.push_back({{"module", c.module}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    if (!c.passed) ++failed;
  }
  if (!o.out.empty()) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    json doc = envelope("selftest", cfg);
    doc["checks"] = jc;
    emit_json(o.out, doc, o.command, cfg);
  }
  if (failed > 0) throw SolverError(std::to_string(failed) + " selftest check(s) failed");
  return kExitOk;
}

}  // namespace detail

inline int dispatch(const CliOptions& o) {
  if (o.command == "scan-rotations") return detail::run_scan(o);
  if (o.command == "solve-linear") return detail::run_linear(o);
  if (o.command == "solve-nonlinear") return detail::run_nonlinear(o);
  if (o.command == "gamma-study" || o.command == "refined-study" || o.command == "lambda-study") {
    return detail::run_study(o);
  }
  if (o.command == "selftest") return detail::run_selftest_command(o);
  throw ValidationError("unknown command '" + o.command + "'");
}

inline int run_cli(int argc, char** argv) {
  CLI::App app{"Pressure live-load energies, their linearized limit and optimal rotations"};
  app.require_subcommand(1);
  CliOptions o;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "JSON run configuration");
    if (needs_config) c->required();
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--csv", o.csv, "CSV table path");
    sub->add_option("--svg", o.svg, "SVG plot path");
    sub->add_option("--threads", o.threads, "worker threads (0 = auto)");
    sub->add_option("--seed", o.seed, "seed for the multistart perturbations");
  };

  auto* scan = app.add_subcommand("scan-rotations", "tabulate the rotation functional over the circle");
  common(scan, true);
  scan->add_option("--grid", o.grid, "number of sampled angles");
  auto* lin = app.add_subcommand("solve-linear", "solve the linearized problem at one optimal angle");
  common(lin, true);
  lin->add_option("--alpha0", o.alpha0, "angle in radians or 'auto'");
  auto* nl = app.add_subcommand("solve-nonlinear", "minimize the nonlinear energy at one eps");
  common(nl, true);
  nl->add_option("--eps", o.eps, "load scale")->required();
  common(app.add_subcommand("gamma-study", "eps sweep of E_eps/eps^2 against min E_0"), true);
  common(app.add_subcommand("refined-study", "eps sweep with the second variation at the nearest optimal angle"), true);
  common(app.add_subcommand("lambda-study", "eps sweep of the energy remainder with lambda = eps^a"), true);
  common(app.add_subcommand("selftest", "run the built-in sanity examples"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(o);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace liveload
