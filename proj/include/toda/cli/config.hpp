#pragma once

// Run configuration: line-based `key = value` text with `[section]` headers.
// '#' starts a comment. Every key is known in advance; parse_config fills a
// RunConfig whose defaults are all explicit.

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "toda/error.hpp"
#include "toda/types.hpp"

namespace toda::cli {

enum class Family { monge, ward, firstterm, secondstep, recurrence, custom };

inline const char* to_string(Family f) noexcept {
  switch (f) {
    case Family::monge: return "monge";
    case Family::ward: return "ward";
    case Family::firstterm: return "firstterm";
    case Family::secondstep: return "secondstep";
    case Family::recurrence: return "recurrence";
    case Family::custom: return "custom";
  }
  return "?";
}

enum class Format { csv, json };

struct MongeSection {
  std::string profile = "linear";  // linear | square | exp
  double c0 = 0.0, c1 = 1.0;       // linear profile F = c0 + c1 u
  std::string variant = "A";
  double bracket_lo = 1e-6, bracket_hi = 100.0;
};

struct WardModeSpec {
  double lambda, amplitude, g0, dg0;
};

struct WardSection {
  double A = 1.0, B = 0.5, u0 = 1.0, w0 = 0.0, u_min = 0.5, u_max = 2.0;
  std::vector<WardModeSpec> modes{{0.0, 1.0, 0.0, 1.0}, {0.5, 0.1, 1.0, 0.0}};
  double guess_u = 1.2, guess_w = 0.1;
  double auto_half = 0.1;
  std::size_t auto_n = 5;
};

struct FirstTermSection {
  std::string wl = "zero";            // zero | paper | rederived | polynomial | separable
  std::string coefficients = "auto";  // auto | paper | rederived
  double eps = 0.3;
  int n = 2;
  double amplitude = 1.0;
  double k = 1.0;
  std::string root = "plus";
  double s = -1.0;
};

struct SecondStepSection {
  std::string form = "rederived";  // rederived | paper
  std::string envelope = "one";    // one | gaussian
  double envelope_width = 1.0;
  double m = -6.0, s_min = -12.0, s_max = 3.0, ds = 0.08;
  std::array<double, 3> center{0.2, 0.1, 0.0};
  std::vector<double> f{};  // coefficients of the free polynomial f(b)
  double auto_half = 0.05;
  std::size_t auto_n = 5;
};

struct CustomSection {
  // linear_fraction | z_linear | exp_sum | smooth_sin | smooth_log | smooth_ratio
  std::string field = "linear_fraction";
  double a0 = 0.0, a1 = 1.0, a3 = 1.0, a4 = -1.0, a5 = 1.0;  // (a1 x + a3 z + a0)/(a4 y + a5)
  double c0 = 2.0, c1 = 3.0;                                 // c0 + c1 z
};

struct RecurrenceSection {
  std::string source = "custom";  // family providing u
  int n_top = 1;
  std::optional<double> y0;  // defaults to the grid's first y plane
  std::string base = "zero";  // zero | gamma (first-term source only)
};

struct SweepSection {
  std::vector<double> h{0.08, 0.04, 0.02};
  std::string quantity = "toda";  // toda | dx | dzz | dxy
  std::optional<double> expected_order;
  std::optional<double> band;
};

struct DiscreteSection {
  std::vector<double> eps{0.1, 0.05, 0.025};
  double expected_order = 2.0;
  double band = 0.2;
  double exact_tol = 1e-9;
};

struct RunConfig {
  Family family = Family::monge;
  std::optional<Grid3> grid;  // empty means "auto" (ward, secondstep)
  StencilConfig stencil{1e-3, 4, 0, true};
  double tolerance = 1e-7;
  Format format = Format::json;
  std::string out;  // empty: stdout
  bool linearization = false;
  double linearization_h = 1e-2;
  double linearization_tolerance = 1e-5;

  MongeSection monge;
  WardSection ward;
  FirstTermSection firstterm;
  SecondStepSection secondstep;
  CustomSection custom;
  RecurrenceSection recurrence;
  SweepSection sweep;
  DiscreteSection discrete;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

inline std::string where(int line) { return "line " + std::to_string(line) + ": "; }

inline double to_double(const std::string& v, int line) {
  double x = 0.0;
  const char* b = v.data();
  const char* e = b + v.size();
  if (!v.empty() && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc() || p != e || v.empty())
    throw Error(ErrorKind::ParseError, where(line) + "not a number: '" + v + "'");
  return x;
}

inline long to_long(const std::string& v, int line) {
  long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw Error(ErrorKind::ParseError, where(line) + "not an integer: '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::ParseError, where(line) + "not a boolean: '" + v + "'");
}

inline std::vector<double> to_list(const std::string& v, int line) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(to_double(part, line));
  return out;
}

inline std::string one_of(const std::string& v, std::initializer_list<const char*> allowed,
                          int line) {
  for (const char* a : allowed)
    if (v == a) return v;
  std::string msg = where(line) + "'" + v + "' is not one of {";
  bool first = true;
  for (const char* a : allowed) {
    msg += (first ? "" : ", ") + std::string(a);
    first = false;
  }
  throw Error(ErrorKind::RangeError, msg + "}");
}

}  // namespace detail

/// "x0:x1:nx,y0:y1:ny,z0:z1:nz".
inline Grid3 parse_grid(const std::string& text, int line = 0) {
  const auto axes = detail::split(text, ',');
  if (axes.size() != 3)
    throw Error(ErrorKind::ParseError, detail::where(line) + "grid needs three axes");
  std::array<double, 3> lo{}, hi{};
  std::array<std::size_t, 3> n{};
  for (int a = 0; a < 3; ++a) {
    const auto f = detail::split(axes[a], ':');
    if (f.size() != 3)
      throw Error(ErrorKind::ParseError, detail::where(line) + "grid axis must be min:max:count");
    lo[a] = detail::to_double(f[0], line);
    hi[a] = detail::to_double(f[1], line);
    const long c = detail::to_long(f[2], line);
    if (c < 1) throw Error(ErrorKind::RangeError, detail::where(line) + "grid count must be >= 1");
    n[a] = static_cast<std::size_t>(c);
    if (n[a] > 1 && !(hi[a] > lo[a]))
      throw Error(ErrorKind::RangeError, detail::where(line) + "grid axis needs max > min");
  }
  return Grid3::span(lo, hi, n);
}

inline std::vector<WardModeSpec> parse_modes(const std::string& text, int line) {
  std::vector<WardModeSpec> out;
  for (const auto& m : detail::split(text, ';')) {
    if (m.empty()) continue;
    const auto f = detail::split(m, ':');
    if (f.size() != 4)
      throw Error(ErrorKind::ParseError,
                  detail::where(line) + "mode must be lambda:amplitude:g0:dg0");
    out.push_back({detail::to_double(f[0], line), detail::to_double(f[1], line),
                   detail::to_double(f[2], line), detail::to_double(f[3], line)});
  }
  if (out.empty()) throw Error(ErrorKind::RangeError, detail::where(line) + "no modes given");
  return out;
}

inline RunConfig parse_config(const std::string& text) {
  using namespace detail;
  RunConfig cfg;
  std::map<std::string, int> seen;  // "section.key" -> line
  std::string section;
  bool family_set = false;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw Error(ErrorKind::ParseError, where(line) + "unterminated section");
      section = trim(s.substr(1, s.size() - 2));
      one_of(section,
             {"monge", "ward", "firstterm", "secondstep", "custom", "recurrence", "sweep", "discrete"},
             line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, where(line) + "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ParseError, where(line) + "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (auto it = seen.find(full); it != seen.end())
      throw Error(ErrorKind::ParseError, "duplicate key '" + full + "' on lines " +
                                             std::to_string(it->second) + " and " +
                                             std::to_string(line));
    seen[full] = line;

    auto num = [&] { return to_double(val, line); };
    auto unknown = [&] { throw Error(ErrorKind::UnknownKey, where(line) + "unknown key '" + full + "'"); };

    if (section.empty()) {
      if (key == "family") {
        const auto f = one_of(val, {"monge", "ward", "firstterm", "secondstep", "recurrence", "custom"}, line);
        for (Family c : {Family::monge, Family::ward, Family::firstterm, Family::secondstep,
                         Family::recurrence, Family::custom})
          if (f == to_string(c)) cfg.family = c;
        family_set = true;
      } else if (key == "grid") {
        if (val == "auto") cfg.grid.reset();
        else cfg.grid = parse_grid(val, line);
      } else if (key == "h") cfg.stencil.h = num();
      else if (key == "order") cfg.stencil.order = static_cast<int>(to_long(val, line));
      else if (key == "richardson") cfg.stencil.richardson_levels = static_cast<int>(to_long(val, line));
      else if (key == "relative") cfg.stencil.relative = to_bool(val, line);
      else if (key == "tolerance") cfg.tolerance = num();
      else if (key == "format") cfg.format = one_of(val, {"csv", "json"}, line) == std::string("csv") ? Format::csv : Format::json;
      else if (key == "out") cfg.out = val;
      else if (key == "linearization") cfg.linearization = to_bool(val, line);
      else if (key == "linearization_h") cfg.linearization_h = num();
      else if (key == "linearization_tolerance") cfg.linearization_tolerance = num();
      else unknown();
    } else if (section == "monge") {
      auto& m = cfg.monge;
      if (key == "profile") m.profile = one_of(val, {"linear", "square", "exp"}, line);
      else if (key == "c0") m.c0 = num();
      else if (key == "c1") m.c1 = num();
      else if (key == "variant") m.variant = one_of(val, {"A", "B"}, line);
      else if (key == "bracket_lo") m.bracket_lo = num();
      else if (key == "bracket_hi") m.bracket_hi = num();
      else unknown();
    } else if (section == "ward") {
      auto& w = cfg.ward;
      if (key == "A") w.A = num();
      else if (key == "B") w.B = num();
      else if (key == "u0") w.u0 = num();
      else if (key == "w0") w.w0 = num();
      else if (key == "u_min") w.u_min = num();
      else if (key == "u_max") w.u_max = num();
      else if (key == "modes") w.modes = parse_modes(val, line);
      else if (key == "guess_u") w.guess_u = num();
      else if (key == "guess_w") w.guess_w = num();
      else if (key == "auto_half") w.auto_half = num();
      else if (key == "auto_n") w.auto_n = static_cast<std::size_t>(to_long(val, line));
      else unknown();
    } else if (section == "firstterm") {
      auto& f = cfg.firstterm;
      if (key == "wl") f.wl = one_of(val, {"zero", "paper", "rederived", "polynomial", "separable"}, line);
      else if (key == "coefficients") f.coefficients = one_of(val, {"auto", "paper", "rederived"}, line);
      else if (key == "eps") f.eps = num();
      else if (key == "n") f.n = static_cast<int>(to_long(val, line));
      else if (key == "amplitude") f.amplitude = num();
      else if (key == "k") f.k = num();
      else if (key == "root") f.root = one_of(val, {"plus", "minus"}, line);
      else if (key == "s") f.s = num();
      else unknown();
    } else if (section == "secondstep") {
      auto& q = cfg.secondstep;
      if (key == "form") q.form = one_of(val, {"rederived", "paper"}, line);
      else if (key == "envelope") q.envelope = one_of(val, {"one", "gaussian"}, line);
      else if (key == "envelope_width") q.envelope_width = num();
      else if (key == "m") q.m = num();
      else if (key == "s_min") q.s_min = num();
      else if (key == "s_max") q.s_max = num();
      else if (key == "ds") q.ds = num();
      else if (key == "center") {
        const auto c = to_list(val, line);
        if (c.size() != 3) throw Error(ErrorKind::ParseError, where(line) + "center needs a, b, c");
        q.center = {c[0], c[1], c[2]};
      } else if (key == "f") q.f = to_list(val, line);
      else if (key == "auto_half") q.auto_half = num();
      else if (key == "auto_n") q.auto_n = static_cast<std::size_t>(to_long(val, line));
      else unknown();
    } else if (section == "custom") {
      auto& c = cfg.custom;
      if (key == "field")
        c.field = one_of(val, {"linear_fraction", "z_linear", "exp_sum", "smooth_sin", "smooth_log", "smooth_ratio"}, line);
      else if (key == "a0") c.a0 = num();
      else if (key == "a1") c.a1 = num();
      else if (key == "a3") c.a3 = num();
      else if (key == "a4") c.a4 = num();
      else if (key == "a5") c.a5 = num();
      else if (key == "c0") c.c0 = num();
      else if (key == "c1") c.c1 = num();
      else unknown();
    } else if (section == "recurrence") {
      auto& r = cfg.recurrence;
      if (key == "source") r.source = one_of(val, {"monge", "ward", "firstterm", "secondstep", "custom"}, line);
      else if (key == "n_top") r.n_top = static_cast<int>(to_long(val, line));
      else if (key == "y0") r.y0 = num();
      else if (key == "base") r.base = one_of(val, {"zero", "gamma"}, line);
      else unknown();
    } else if (section == "sweep") {
      auto& w = cfg.sweep;
      if (key == "h") w.h = to_list(val, line);
      else if (key == "quantity") w.quantity = one_of(val, {"toda", "dx", "dzz", "dxy"}, line);
      else if (key == "expected_order") w.expected_order = num();
      else if (key == "band") w.band = num();
      else unknown();
    } else if (section == "discrete") {
      auto& d = cfg.discrete;
      if (key == "eps") d.eps = to_list(val, line);
      else if (key == "expected_order") d.expected_order = num();
      else if (key == "band") d.band = num();
      else if (key == "exact_tol") d.exact_tol = num();
      else unknown();
    }
  }
  if (!family_set) throw Error(ErrorKind::ParseError, "missing required key 'family'");
  cfg.stencil.validate();
  if (!(cfg.tolerance > 0.0)) throw Error(ErrorKind::RangeError, "tolerance must be > 0");
  if (!(cfg.linearization_h > 0.0)) throw Error(ErrorKind::RangeError, "linearization_h must be > 0");
  if (cfg.recurrence.n_top < 0) throw Error(ErrorKind::RangeError, "n_top must be >= 0");
  if (cfg.ward.auto_n < 1 || cfg.secondstep.auto_n < 1)
    throw Error(ErrorKind::RangeError, "auto_n must be >= 1");
  return cfg;
}

/// Residual runs need at least five points per axis.
inline void require_residual_grid(const Grid3& g) {
  for (int a = 0; a < 3; ++a)
    if (g.counts[a] < 5) throw Error(ErrorKind::RangeError, "grid counts must be >= 5 on every axis");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace toda::cli
