#pragma once

// JSON and CSV emission for run results. CSV: '.' decimal, ',' separator,
// LF endings, %.17g floats. JSON keys come out in insertion order.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toda/error.hpp"
#include "toda/residuals.hpp"

namespace toda::cli {

using json = nlohmann::ordered_json;

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// NaN and infinities have no JSON literal; they become null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct ErrorRecord {
  std::string kind;
  std::string message;
};

inline ErrorRecord error_record(const std::exception& e) {
  if (const auto* te = dynamic_cast<const Error*>(&e)) return {to_string(te->kind()), te->what()};
  return {"Exception", e.what()};
}

inline json grid_json(const Grid3& g) {
  return json{{"origin", {num(g.origin.x), num(g.origin.y), num(g.origin.z)}},
              {"spacing", {num(g.spacing[0]), num(g.spacing[1]), num(g.spacing[2])}},
              {"counts", {g.counts[0], g.counts[1], g.counts[2]}}};
}

inline json stencil_json(const StencilConfig& s) {
  return json{{"h", num(s.h)}, {"order", s.order}, {"richardson", s.richardson_levels}, {"relative", s.relative}};
}

inline json report_json(const ResidualReport& r, bool timing) {
  return json{{"kind", r.kind},
              {"max_abs", num(r.max_abs)},
              {"rms", num(r.rms)},
              {"n_points", r.n_points},
              {"n_skipped", r.n_skipped},
              {"worst_point", {num(r.worst_point.x), num(r.worst_point.y), num(r.worst_point.z)}},
              {"wall_ms", timing ? r.wall_ms : 0}};
}

inline json errors_json(const std::vector<ErrorRecord>& errors) {
  json a = json::array();
  for (const auto& e : errors) a.push_back(json{{"kind", e.kind}, {"message", e.message}});
  return a;
}

/// Result of verify-like runs.
struct RunResult {
  std::string family;
  std::optional<Grid3> grid;
  StencilConfig stencil;
  std::vector<ResidualReport> reports;
  bool pass = false;
  std::vector<ErrorRecord> errors;
  json extra = json::object();  // command-specific additions, appended after the fixed keys
};

inline std::string to_json_text(const RunResult& r, bool timing) {
  json j;
  j["family"] = r.family;
  j["grid"] = r.grid ? grid_json(*r.grid) : json(nullptr);
  j["stencil"] = stencil_json(r.stencil);
  json reps = json::array();
  for (const auto& rep : r.reports) reps.push_back(report_json(rep, timing));
  j["reports"] = reps;
  j["pass"] = r.pass;
  j["errors"] = errors_json(r.errors);
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::string to_csv_text(const RunResult& r, bool timing) {
  std::string out = "family,kind,max_abs,rms,n_points,n_skipped,worst_x,worst_y,worst_z,wall_ms\n";
  for (const auto& rep : r.reports) {
    out += csv_escape(r.family) + "," + csv_escape(rep.kind) + "," + fmt17(rep.max_abs) + "," +
           fmt17(rep.rms) + "," + std::to_string(rep.n_points) + "," + std::to_string(rep.n_skipped) +
           "," + fmt17(rep.worst_point.x) + "," + fmt17(rep.worst_point.y) + "," +
           fmt17(rep.worst_point.z) + "," + std::to_string(timing ? rep.wall_ms : 0) + "\n";
  }
  for (const auto& e : r.errors) out += "# error," + csv_escape(e.kind) + "," + csv_escape(e.message) + "\n";
  out += std::string("# pass=") + (r.pass ? "true" : "false") + "\n";
  return out;
}

}  // namespace toda::cli
