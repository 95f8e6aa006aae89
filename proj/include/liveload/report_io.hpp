#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liveload/config.hpp"
#include "liveload/harness.hpp"
#include "liveload/rotations.hpp"

namespace liveload {

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json optimal_set_to_json(const OptimalSet& s) {
  json arcs = json::array();
  for (const auto& a : s.arcs) arcs.push_back({{"start", a.start}, {"length", a.length}});
  return {{"isolated", s.isolated}, {"arcs", arcs}, {"min_value", s.min_value}, {"grid_tolerance", s.grid_tolerance}};
}

inline json gamma_record_to_json(const GammaRecord& r, bool with_field) {
  json j = {{"eps", r.eps},
            {"energy", r.energy},
            {"energy_over_eps2", r.energy_over_eps2},
            {"alpha", r.alpha},
            {"dist_to_R", r.dist_to_R},
            {"det_dev_sq_over_eps2", r.det_dev_sq_over_eps2},
            {"gp_over_eps2", r.gp_over_eps2},
            {"w1p_error", r.w1p_error},
            {"u_norm", r.u_norm},
            {"nearest_optimal", r.nearest_optimal},
            {"a_eps", r.a_eps},
            {"A0_scalar", r.A0_scalar},
            {"F_value", r.F_value},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"gradient_norm", r.gradient_norm},
            {"status", r.status},
            {"best_start", r.best_start},
            {"start_energies", r.start_energies}};
  if (with_field) j["u"] = vector_to_json(r.u);
  return j;
}

inline json report_to_json(const StudyReport& rep, const RunConfig& cfg) {
  json out;
  out["kind"] = rep.kind;
  out["config_hash"] = rep.config_hash;
  out["config"] = config_to_json(cfg);
  json resolutions = json::array();
  for (const auto& r : rep.resolutions) {
    json records = json::array();
    for (const auto& g : r.records) records.push_back(gamma_record_to_json(g, false));
    json jr = {{"resolution", r.resolution},
               {"nodes", r.nodes},
               {"triangles", r.triangles},
               {"area", r.area},
               {"optimal_set", optimal_set_to_json(r.optimal)},
               {"scale", r.scale},
               {"min_E0", r.min_E0},
               {"alpha0", r.alpha0},
               {"u0_norm", r.u0_norm},
               {"rotation_load", r.rotation_load},
               {"el_residual_at_alpha0", r.el_residual_at_alpha0},
               {"F_at_alpha0", r.F_at_alpha0},
               {"C_max", r.C_max},
               {"C_min", r.C_min},
               {"records", records}};
    jr["closed_form_E0"] = r.closed_form_E0 ? json(*r.closed_form_E0) : json(nullptr);
    if (rep.kind == "refined") {
      jr["limit"] = {{"s", r.s_limit},
                     {"A0", r.A0_limit},
                     {"F_value", r.F_limit},
                     {"F_tolerance", r.F_tolerance},
                     {"A0_settled", r.A0_settled}};
    }
    resolutions.push_back(jr);
  }
  out["resolutions"] = resolutions;
  if (rep.kind == "lambda") {
    json lam = json::array();
    for (const auto& l : rep.lambda_records) {
      lam.push_back({{"eps", l.eps},
                     {"lambda", l.lambda},
                     {"remainder", l.remainder},
                     {"remainder_over_target", l.remainder_over_target},
                     {"energy_over_eps2", l.energy_over_eps2},
                     {"inf_over_eps2", l.inf_over_eps2},
                     {"energy_gap", l.energy_gap},
                     {"extracted_alpha", l.extracted_alpha},
                     {"extracted_distance", l.extracted_distance},
                     {"distance_over_lambda", l.distance_over_lambda}});
    }
    out["lambda"] = {{"resolution", rep.lambda_resolution}, {"exponent", rep.lambda_exponent}, {"records", lam}};
  }
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Everything nondeterministic goes here so that the rest of the document is
// reproducible.
inline json run_metadata(const std::string& command, int threads) {
  return {{"command", command}, {"generated_at", utc_timestamp()}, {"threads", threads}};
}

namespace detail {

inline void need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError("report is missing '" + where + key + "'");
}

}  // namespace detail

// Structural check of an emitted document; the embedded config must parse and
// reproduce the recorded hash.
inline void validate_output_json(const json& doc) {
  using detail::need;
  if (!doc.is_object()) throw ValidationError("report must be a JSON object");
  need(doc, "kind", "");
  need(doc, "config", "");
  need(doc, "config_hash", "");
  need(doc, "metadata", "");
  const RunConfig cfg = parse_config(doc.at("config"));
  if (config_hash(cfg) != doc.at("config_hash").get<std::string>()) {
    throw ValidationError("config_hash does not match the embedded config");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "gamma" || kind == "refined" || kind == "lambda") {
    need(doc, "resolutions", "");
    for (const auto& r : doc.at("resolutions")) {
      for (const char* k : {"resolution", "min_E0", "alpha0", "optimal_set", "records"}) need(r, k, "resolutions[].");
      for (const auto& rec : r.at("records")) {
        for (const char* k : {"eps", "energy", "energy_over_eps2", "alpha", "dist_to_R", "det_dev_sq_over_eps2",
                              "gp_over_eps2", "w1p_error", "converged"}) {
          need(rec, k, "records[].");
        }
      }
      if (kind == "refined") need(r, "limit", "resolutions[].");
    }
    if (kind == "lambda") need(doc, "lambda", "");
  } else if (kind == "scan-rotations") {
    for (const char* k : {"grid", "optimal_set", "rows"}) need(doc, k, "");
  } else if (kind == "solve-linear") {
    for (const char* k : {"alpha0", "energy", "rotation_load", "u"}) need(doc, k, "");
  } else if (kind == "solve-nonlinear") {
    for (const char* k : {"eps", "diagnostics", "y", "alpha", "u"}) need(doc, k, "");
  } else if (kind == "selftest") {
    need(doc, "checks", "");
  } else {
    throw ValidationError("unknown report kind '" + kind + "'");
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string scan_csv(const std::vector<RotationScanRow>& rows) {
  std::ostringstream os;
  os << "alpha,functional_value,el_residual,second_variation_unit\n";
  for (const auto& r : rows) {
    os << csv_number(r.alpha) << ',' << csv_number(r.value) << ',' << csv_number(r.el_residual) << ','
       << csv_number(r.second_variation_unit) << '\n';
  }
  return os.str();
}

inline const char* kStudyCsvHeader =
    "resolution,eps,energy,energy_over_eps2,alpha,dist_to_R,det_dev_sq_over_eps2,gp_over_eps2,w1p_error,u_norm,"
    "A0_scalar,F_value,converged,iterations";

inline const char* kLambdaCsvHeader =
    "resolution,eps,lambda,remainder,remainder_over_target,energy_over_eps2,inf_over_eps2,energy_gap,"
    "extracted_distance,distance_over_lambda";

inline std::string study_csv(const StudyReport& rep) {
  std::ostringstream os;
  if (rep.kind == "lambda") {
    os << kLambdaCsvHeader << '\n';
    for (const auto& l : rep.lambda_records) {
      os << rep.lambda_resolution << ',' << csv_number(l.eps) << ',' << csv_number(l.lambda) << ','
         << csv_number(l.remainder) << ',' << csv_number(l.remainder_over_target) << ','
         << csv_number(l.energy_over_eps2) << ',' << csv_number(l.inf_over_eps2) << ',' << csv_number(l.energy_gap)
         << ',' << csv_number(l.extracted_distance) << ',' << csv_number(l.distance_over_lambda) << '\n';
    }
    return os.str();
  }
  os << kStudyCsvHeader << '\n';
  for (const auto& r : rep.resolutions) {
    for (const auto& g : r.records) {
      os << r.resolution << ',' << csv_number(g.eps) << ',' << csv_number(g.energy) << ','
         << csv_number(g.energy_over_eps2) << ',' << csv_number(g.alpha) << ',' << csv_number(g.dist_to_R) << ','
         << csv_number(g.det_dev_sq_over_eps2) << ',' << csv_number(g.gp_over_eps2) << ',' << csv_number(g.w1p_error)
         << ',' << csv_number(g.u_norm) << ',' << csv_number(g.A0_scalar) << ',' << csv_number(g.F_value) << ','
         << (g.converged ? 1 : 0) << ',' << g.iterations << '\n';
    }
  }
  return os.str();
}

namespace detail {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color;
  bool dashed = false;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

// Minimal line chart: log-scaled x axis, linear y axis.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series) {
  const double W = 640, H = 420, L = 80, R = 20, T = 40, B = 60;
  double x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity, y1 = -kInfinity;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, std::log10(v)), x1 = std::max(x1, std::log10(v));
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) {
    const double pad = std::abs(y0) > 0 ? 0.1 * std::abs(y0) : 1.0;
    y0 -= pad, y1 += pad;
  }
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad, y1 += ypad;
  auto px = [&](double v) { return L + (std::log10(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
       << csv_number(std::round(yv * 1e6) / 1e6) << "</text>\n";
  }
  for (const auto& s : series) {
    for (double v : s.x) {
      os << "<text x=\"" << fmt(px(v)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
         << v << "</text>\n";
    }
    break;
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel << "</text>\n";
  int legend = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
    }
    os << "\"/>\n";
    if (!s.dashed) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        os << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"3\" fill=\"" << s.color
           << "\"/>\n";
      }
    }
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (legend + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
       << s.color << "\">" << s.label << "</text>\n";
    ++legend;
  }
  os << "</svg>\n";
  return os.str();
}

inline const char* palette(int i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

}  // namespace detail

inline std::string study_svg(const StudyReport& rep) {
  std::vector<detail::Series> series;
  if (rep.kind == "lambda") {
    detail::Series s{"remainder * eps / lambda^3", {}, {}, detail::palette(0), false};
    detail::Series g{"energy gap / eps^2", {}, {}, detail::palette(1), false};
    for (const auto& l : rep.lambda_records) {
      s.x.push_back(l.eps), s.y.push_back(l.remainder_over_target);
      g.x.push_back(l.eps), g.y.push_back(l.energy_gap);
    }
    series = {s, g};
    return detail::line_chart("Almost-minimizer scaling", "eps", "value", series);
  }
  int k = 0;
  for (const auto& r : rep.resolutions) {
    detail::Series s{"E/eps^2, resolution " + std::to_string(r.resolution), {}, {}, detail::palette(k), false};
    detail::Series a{"min E0, resolution " + std::to_string(r.resolution), {}, {}, detail::palette(k), true};
    for (const auto& g : r.records) {
      s.x.push_back(g.eps), s.y.push_back(g.energy_over_eps2);
      a.x.push_back(g.eps), a.y.push_back(r.min_E0);
    }
    series.push_back(s);
    series.push_back(a);
    ++k;
  }
  return detail::line_chart("Rescaled minimal energy", "eps", "E_eps / eps^2", series);
}

// Polar plot of the rotation functional, radius shifted so the minimum sits
// on an inner circle.
inline std::string scan_svg(const std::vector<RotationScanRow>& rows) {
  const double size = 480, c = size / 2, r_in = 60, r_out = 220;
  double lo = kInfinity, hi = -kInfinity;
  for (const auto& r : rows) lo = std::min(lo, r.value), hi = std::max(hi, r.value);
  const double span = hi > lo ? hi - lo : 1.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<circle cx=\"" << c << "\" cy=\"" << c << "\" r=\"" << r_in << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
  os << "<circle cx=\"" << c << "\" cy=\"" << c << "\" r=\"" << r_out << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
  os << "<polygon fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (const auto& r : rows) {
    const double rad = r_in + (r.value - lo) / span * (r_out - r_in);
    os << detail::fmt(c + rad * std::cos(r.alpha)) << ',' << detail::fmt(c - rad * std::sin(r.alpha)) << ' ';
  }
  os << "\"/>\n";
  os << "<text x=\"8\" y=\"18\" font-size=\"12\">rotation functional, min " << csv_number(lo) << ", max "
     << csv_number(hi) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace liveload
