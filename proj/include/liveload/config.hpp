#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liveload/common.hpp"
#include "liveload/geometry.hpp"
#include "liveload/linear.hpp"
#include "liveload/material.hpp"
#include "liveload/pressure.hpp"

namespace liveload {

using nlohmann::json;

struct PressureSpec {
  std::string name = "zero";
  double value = 0.0;  // p0 for constant, g_rho for hydrostatic
  ProfileVariant variant = ProfileVariant::strict;

  PressureField build() const { return builtin_pressure(name, value, variant); }
};

struct SolverSettings {
  double grad_tol = 1e-9;
  int max_iter = 5000;
  int lbfgs_memory = 20;
  double noise = 1e-3;  // initial perturbation, relative to the diameter
  LinearMethod linear_method = LinearMethod::cg;
  double linear_tol = 1e-10;
  int linear_max_iter = 20000;
};

struct RotationSettings {
  int grid = 1024;
  double refine_tol = 1e-10;
};

struct StudySettings {
  std::vector<int> resolutions{32, 64};
  double lambda_exponent = 0.4;
  int arc_samples = 9;
};

struct OutputSettings {
  std::string json;
  std::string csv;
  std::string svg;
};

struct RunConfig {
  DomainSpec domain;
  MaterialModel material;
  PressureSpec pressure;
  SolverSettings solver;
  RotationSettings rotations;
  std::vector<double> eps_list{0.08, 0.04, 0.02, 0.01};
  std::vector<double> multistart{0.0, 0.5 * kPi, kPi, 1.5 * kPi};
  std::uint64_t seed = 20240601;
  int threads = 0;
  StudySettings study;
  OutputSettings output;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError("'" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ValidationError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) {
    throw ValidationError("missing required key '" + (where.empty() ? std::string(key) : where + "." + key) + "'");
  }
  return obj.at(key);
}

inline double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError("key '" + key + "' must be a number");
  return v.get<double>();
}

inline int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ValidationError("key '" + key + "' must be an integer");
  return v.get<int>();
}

inline std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ValidationError("key '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<double> as_numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ValidationError("key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_number(e, key));
  return out;
}

inline double get_or(const json& obj, const char* key, const std::string& where, double def) {
  return obj.contains(key) ? as_number(obj.at(key), where + "." + key) : def;
}

inline int get_or_int(const json& obj, const char* key, const std::string& where, int def) {
  return obj.contains(key) ? as_int(obj.at(key), where + "." + key) : def;
}

}  // namespace detail

inline DomainSpec parse_domain(const json& j) {
  using namespace detail;
  reject_unknown(j, "domain", {"kind", "params", "resolution"});
  DomainSpec d;
  const std::string kind = as_string(require(j, "domain", "kind"), "domain.kind");
  d.resolution = as_int(require(j, "domain", "resolution"), "domain.resolution");
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (kind == "disk") {
    reject_unknown(params, "domain.params", {"radius"});
    d.kind = DomainKind::disk;
    d.radius = get_or(params, "radius", "domain.params", 1.0);
  } else if (kind == "annulus") {
    reject_unknown(params, "domain.params", {"r_inner", "r_outer"});
    d.kind = DomainKind::annulus;
    d.r_inner = get_or(params, "r_inner", "domain.params", 1.0);
    d.r_outer = get_or(params, "r_outer", "domain.params", 2.0);
  } else if (kind == "four_lobe") {
    reject_unknown(params, "domain.params", {"r_small", "r_large"});
    d.kind = DomainKind::four_lobe;
    d.r_inner = get_or(params, "r_small", "domain.params", 1.0);
    d.r_outer = get_or(params, "r_large", "domain.params", 2.0);
  } else {
    throw ValidationError("unknown domain.kind '" + kind + "' (expected disk, annulus or four_lobe)");
  }
  d.validate();
  return d;
}

inline json domain_to_json(const DomainSpec& d) {
  json params;
  switch (d.kind) {
    case DomainKind::disk: params = {{"radius", d.radius}}; break;
    case DomainKind::annulus: params = {{"r_inner", d.r_inner}, {"r_outer", d.r_outer}}; break;
    case DomainKind::four_lobe: params = {{"r_small", d.r_inner}, {"r_large", d.r_outer}}; break;
  }
  return {{"kind", to_string(d.kind)}, {"params", params}, {"resolution", d.resolution}};
}

inline MaterialModel parse_material(const json& j) {
  using namespace detail;
  reject_unknown(j, "material", {"c1", "c2", "p", "q"});
  MaterialModel m;
  m.c1 = as_number(require(j, "material", "c1"), "material.c1");
  m.c2 = as_number(require(j, "material", "c2"), "material.c2");
  m.p = as_number(require(j, "material", "p"), "material.p");
  m.q = as_number(require(j, "material", "q"), "material.q");
  m.validate();
  return m;
}

inline PressureSpec parse_pressure(const json& j) {
  using namespace detail;
  reject_unknown(j, "pressure", {"name", "params", "variant"});
  PressureSpec p;
  p.name = as_string(require(j, "pressure", "name"), "pressure.name");
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (p.name == "zero" || p.name == "example52") {
    reject_unknown(params, "pressure.params", {});
  } else if (p.name == "constant") {
    reject_unknown(params, "pressure.params", {"p0"});
    p.value = as_number(require(params, "pressure.params", "p0"), "pressure.params.p0");
  } else if (p.name == "hydrostatic") {
    reject_unknown(params, "pressure.params", {"g_rho"});
    p.value = as_number(require(params, "pressure.params", "g_rho"), "pressure.params.g_rho");
  } else {
    throw ValidationError("unknown pressure.name '" + p.name + "'");
  }
  if (j.contains("variant")) {
    if (p.name != "example52") throw ValidationError("pressure.variant only applies to example52");
    p.variant = parse_variant(as_string(j.at("variant"), "pressure.variant"));
  }
  p.build();  // validates parameters
  return p;
}

inline json pressure_to_json(const PressureSpec& p) {
  json out = {{"name", p.name}, {"params", json::object()}};
  if (p.name == "constant") out["params"]["p0"] = p.value;
  if (p.name == "hydrostatic") out["params"]["g_rho"] = p.value;
  if (p.name == "example52") out["variant"] = to_string(p.variant);
  return out;
}

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  reject_unknown(j, "", {"domain", "material", "pressure", "solver", "rotations", "eps_list", "multistart", "seed",
                         "threads", "study", "output"});
  RunConfig c;
  c.domain = parse_domain(require(j, "", "domain"));
  c.material = parse_material(require(j, "", "material"));
  c.pressure = parse_pressure(require(j, "", "pressure"));

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, "solver", {"grad_tol", "max_iter", "lbfgs_memory", "noise", "linear_method", "linear_tol",
                                 "linear_max_iter"});
    c.solver.grad_tol = get_or(s, "grad_tol", "solver", c.solver.grad_tol);
    c.solver.max_iter = get_or_int(s, "max_iter", "solver", c.solver.max_iter);
    c.solver.lbfgs_memory = get_or_int(s, "lbfgs_memory", "solver", c.solver.lbfgs_memory);
    c.solver.noise = get_or(s, "noise", "solver", c.solver.noise);
    if (s.contains("linear_method")) {
      c.solver.linear_method = parse_linear_method(as_string(s.at("linear_method"), "solver.linear_method"));
    }
    c.solver.linear_tol = get_or(s, "linear_tol", "solver", c.solver.linear_tol);
    c.solver.linear_max_iter = get_or_int(s, "linear_max_iter", "solver", c.solver.linear_max_iter);
  }
  if (!(c.solver.grad_tol > 0.0)) throw ValidationError("solver.grad_tol must be positive");
  if (c.solver.max_iter < 1) throw ValidationError("solver.max_iter must be positive");
  if (c.solver.lbfgs_memory < 1) throw ValidationError("solver.lbfgs_memory must be positive");
  if (!(c.solver.noise >= 0.0)) throw ValidationError("solver.noise must be nonnegative");
  if (!(c.solver.linear_tol > 0.0)) throw ValidationError("solver.linear_tol must be positive");

  if (j.contains("rotations")) {
    const json& r = j.at("rotations");
    reject_unknown(r, "rotations", {"grid", "refine_tol"});
    c.rotations.grid = get_or_int(r, "grid", "rotations", c.rotations.grid);
    c.rotations.refine_tol = get_or(r, "refine_tol", "rotations", c.rotations.refine_tol);
  }
  if (c.rotations.grid < 64) throw ValidationError("rotations.grid must be at least 64");
  if (!(c.rotations.refine_tol > 0.0)) throw ValidationError("rotations.refine_tol must be positive");

  if (j.contains("eps_list")) c.eps_list = as_numbers(j.at("eps_list"), "eps_list");
  if (c.eps_list.empty()) throw ValidationError("eps_list must not be empty");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0.0)) throw ValidationError("eps_list entries must be positive");
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) throw ValidationError("eps_list must be strictly decreasing");
  }
  if (j.contains("multistart")) c.multistart = as_numbers(j.at("multistart"), "multistart");
  if (c.multistart.empty()) throw ValidationError("multistart must list at least one angle");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw ValidationError("key 'seed' must be a nonnegative integer");
    }
    if (j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0) {
      throw ValidationError("key 'seed' must be a nonnegative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) c.threads = as_int(j.at("threads"), "threads");
  if (c.threads < 0) throw ValidationError("threads must be nonnegative");

  if (j.contains("study")) {
    const json& s = j.at("study");
    reject_unknown(s, "study", {"resolutions", "lambda_exponent", "arc_samples"});
    if (s.contains("resolutions")) {
      c.study.resolutions.clear();
      if (!s.at("resolutions").is_array()) throw ValidationError("key 'study.resolutions' must be an array");
      for (const auto& v : s.at("resolutions")) c.study.resolutions.push_back(as_int(v, "study.resolutions"));
    }
    c.study.lambda_exponent = get_or(s, "lambda_exponent", "study", c.study.lambda_exponent);
    c.study.arc_samples = get_or_int(s, "arc_samples", "study", c.study.arc_samples);
  }
  if (c.study.resolutions.empty()) throw ValidationError("study.resolutions must not be empty");
  for (int r : c.study.resolutions) {
    if (r < 2) throw ValidationError("study.resolutions entries must be at least 2");
  }
  if (!(c.study.lambda_exponent > 1.0 / 3.0 && c.study.lambda_exponent < 0.5)) {
    throw ValidationError("study.lambda_exponent must lie in (1/3, 1/2)");
  }
  if (c.study.arc_samples < 2) throw ValidationError("study.arc_samples must be at least 2");

  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown(o, "output", {"json", "csv", "svg"});
    if (o.contains("json")) c.output.json = as_string(o.at("json"), "output.json");
    if (o.contains("csv")) c.output.csv = as_string(o.at("csv"), "output.csv");
    if (o.contains("svg")) c.output.svg = as_string(o.at("svg"), "output.svg");
  }
  return c;
}

// Canonical form with every default spelled out; the config hash is taken
// over its compact dump.
inline json config_to_json(const RunConfig& c) {
  json out;
  out["domain"] = domain_to_json(c.domain);
  out["material"] = {{"c1", c.material.c1}, {"c2", c.material.c2}, {"p", c.material.p}, {"q", c.material.q}};
  out["pressure"] = pressure_to_json(c.pressure);
  out["solver"] = {{"grad_tol", c.solver.grad_tol},
                   {"max_iter", c.solver.max_iter},
                   {"lbfgs_memory", c.solver.lbfgs_memory},
                   {"noise", c.solver.noise},
                   {"linear_method", c.solver.linear_method == LinearMethod::cg ? "cg" : "direct"},
                   {"linear_tol", c.solver.linear_tol},
                   {"linear_max_iter", c.solver.linear_max_iter}};
  out["rotations"] = {{"grid", c.rotations.grid}, {"refine_tol", c.rotations.refine_tol}};
  out["eps_list"] = c.eps_list;
  out["multistart"] = c.multistart;
  out["seed"] = c.seed;
  out["threads"] = c.threads;
  out["study"] = {{"resolutions", c.study.resolutions},
                  {"lambda_exponent", c.study.lambda_exponent},
                  {"arc_samples", c.study.arc_samples}};
  json o = json::object();
  if (!c.output.json.empty()) o["json"] = c.output.json;
  if (!c.output.csv.empty()) o["csv"] = c.output.csv;
  if (!c.output.svg.empty()) o["svg"] = c.output.svg;
  out["output"] = o;
  return out;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Hash of the settings that affect results; output paths and the thread count
// are excluded.
inline std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("output");
  j.erase("threads");
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(j.dump());
  return os.str();
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

}  // namespace liveload
