#pragma once

// Commands behind the toda_cli binary. Each returns the exit code and the
// text destined for --out (or stdout); nothing here touches the filesystem
// except reading the config.
//   exit 0: everything passed, 1: a residual or order check failed,
//   2: execution error (bad config, I/O, solver breakdown).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "toda/cli/config.hpp"
#include "toda/cli/family.hpp"
#include "toda/cli/report_io.hpp"
#include "toda/recurrence.hpp"
#include "toda/residuals.hpp"

namespace toda::cli {

struct Options {
  std::string config_path;
  std::optional<std::string> config_text;  // used instead of reading config_path
  std::optional<std::string> out;
  std::optional<Format> format;
  std::optional<double> tol;
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<std::string> grid;
  bool timing = false;
};

struct CommandOutput {
  int exit_code = 2;
  std::string text;
  std::string out_path;  // empty: stdout
};

inline std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_color_mt("toda");
    l->set_pattern("[%l] %v");
    spdlog::level::level_enum lvl = spdlog::level::info;
    if (const char* env = std::getenv("TODA_LOG")) {
      const std::string v = env;
      if (v == "quiet") lvl = spdlog::level::off;
      else if (v == "debug") lvl = spdlog::level::debug;
      else if (v != "info") l->warn("TODA_LOG='{}' not in {{quiet, info, debug}}; using info", v);
    }
    l->set_level(lvl);
    return l;
  }();
  return log;
}

namespace detail {

struct Prepared {
  RunConfig cfg;
  unsigned threads = 1;
  std::optional<Grid3> grid_override;
  Format format = Format::json;
  std::string out;
};

inline Prepared prepare(const Options& opt) {
  Prepared p;
  p.cfg = opt.config_text ? parse_config(*opt.config_text) : load_config(opt.config_path);
  if (opt.tol) {
    if (!(*opt.tol > 0.0)) throw Error(ErrorKind::RangeError, "--tol must be > 0");
    p.cfg.tolerance = *opt.tol;
  }
  if (opt.grid) p.grid_override = parse_grid(*opt.grid);
  p.threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  p.format = opt.format ? *opt.format : p.cfg.format;
  p.out = opt.out ? *opt.out : p.cfg.out;
  return p;
}

inline std::string render(const RunResult& r, Format f, bool timing) {
  return f == Format::csv ? to_csv_text(r, timing) : to_json_text(r, timing);
}

// Output target for failures that happen before the config is known.
inline CommandOutput failure(const Options& opt, const std::exception& e, const char* command) {
  logger()->error("{}: {}", command, e.what());
  RunResult r;
  r.stencil = RunConfig{}.stencil;
  r.errors.push_back(error_record(e));
  const Format f = opt.format.value_or(Format::json);
  return {2, render(r, f, opt.timing), opt.out.value_or("")};
}

inline bool all_within(const std::vector<ResidualReport>& reps, double tol) {
  for (const auto& r : reps)
    if (!r.passes(tol)) return false;
  return !reps.empty();
}

}  // namespace detail

/// Chain, consistency reports, symmetry of T = u alpha_0 and the truncation
/// coherence check. Passes when the chain is coherent (n_top >= 1) or, for
/// n_top = 0, when the symmetry report is within tolerance.
inline RunResult run_recurrence(const RunConfig& cfg, const std::optional<Grid3>& grid_override,
                                unsigned threads, std::vector<std::string>* csv_rows = nullptr) {
  const auto& rc = cfg.recurrence;
  Family src = Family::custom;
  for (Family f : {Family::monge, Family::ward, Family::firstterm, Family::secondstep, Family::custom})
    if (rc.source == to_string(f)) src = f;
  const FamilyHandle h = build_family(cfg, src);
  const Grid3 g = resolve_grid(cfg, h, grid_override);
  require_residual_grid(g);
  const double y0 = rc.y0.value_or(g.origin.y);
  recurrence::BaseData base;
  if (rc.base == "gamma") {
    if (src != Family::firstterm) throw Error(ErrorKind::RangeError, "base = gamma needs source = firstterm");
    base = [gamma = h.gamma](int level, const Point3& p) { return level == 0 ? gamma(p) : 0.0; };
  }
  logger()->info("recurrence: source {} n_top {} y0 {}", h.name, rc.n_top, y0);
  const auto u = recurrence::GridField::sample(h.u, g, threads);
  const auto chain = recurrence::alpha_chain(u, rc.n_top, y0, base, threads);

  RunResult r;
  r.family = "recurrence/" + h.name;
  r.grid = g;
  r.stencil = cfg.stencil;
  for (int m = 1; m <= rc.n_top; ++m)
    r.reports.push_back(recurrence::grid_report(r.family, "consistency_" + std::to_string(m),
                                                recurrence::alpha_consistency_grid(u, chain, m)));
  const auto t = recurrence::T_from_chain(u, chain);
  auto sym = t.symmetry;
  sym.family_name = r.family;
  r.reports.push_back(sym);

  r.extra["n_top"] = rc.n_top;
  r.extra["y0"] = num(y0);
  if (rc.n_top >= 1) {
    const auto c = recurrence::truncation_coherence(h.u, g, rc.n_top, y0, base, threads);
    r.extra["coherence"] = json{{"residual", num(c.residual)}, {"budget", num(c.budget)}, {"coherent", c.coherent}};
    r.pass = c.coherent;
  } else {
    r.pass = sym.passes(cfg.tolerance);
  }
  if (csv_rows) {
    std::string head = "x,y,z,u";
    for (int m = rc.n_top; m >= 0; --m) head += ",alpha_" + std::to_string(m);
    csv_rows->push_back(head + ",T");
    for (std::size_t n = 0; n < g.total(); ++n) {
      const Point3 p = g.point(n);
      std::string row = fmt17(p.x) + "," + fmt17(p.y) + "," + fmt17(p.z) + "," + fmt17(u.values[n]);
      for (int m = rc.n_top; m >= 0; --m) row += "," + fmt17(chain.alpha(m).values[n]);
      csv_rows->push_back(row + "," + fmt17(t.T.values[n]));
    }
  }
  return r;
}

inline RunResult run_verify(const RunConfig& cfg, const std::optional<Grid3>& grid_override,
                            unsigned threads) {
  if (cfg.family == Family::recurrence) return run_recurrence(cfg, grid_override, threads);
  const FamilyHandle h = build_family(cfg, cfg.family);
  const Grid3 g = resolve_grid(cfg, h, grid_override);
  require_residual_grid(g);
  logger()->info("verify: {} on {}x{}x{} grid, {} threads", h.name, g.counts[0], g.counts[1], g.counts[2], threads);
  const ReportBundle b = h.verify(g, cfg.stencil, threads);
  RunResult r;
  r.family = b.family;
  r.grid = g;
  r.stencil = cfg.stencil;
  r.reports = b.reports;
  r.pass = detail::all_within(r.reports, cfg.tolerance);
  if (cfg.linearization) {
    const auto lin = linearization_reports(h.u, g, cfg.stencil.with_h(cfg.linearization_h), threads, b.family);
    r.reports.insert(r.reports.end(), lin.reports.begin(), lin.reports.end());
    r.pass = r.pass && detail::all_within(lin.reports, cfg.linearization_tolerance);
  }
  for (const auto& rep : r.reports)
    logger()->debug("{} {}: max_abs {:.3e} rms {:.3e} skipped {}", r.family, rep.kind, rep.max_abs, rep.rms, rep.n_skipped);
  return r;
}

inline CommandOutput cmd_verify(const Options& opt) {
  try {
    const auto p = detail::prepare(opt);
    RunResult r;
    try {
      r = run_verify(p.cfg, p.grid_override, p.threads);
    } catch (const std::exception& e) {
      logger()->error("verify: {}", e.what());
      r.family = to_string(p.cfg.family);
      r.stencil = p.cfg.stencil;
      r.errors.push_back(error_record(e));
      return {2, detail::render(r, p.format, opt.timing), p.out};
    }
    logger()->info("verify: {}", r.pass ? "pass" : "fail");
    return {r.pass ? 0 : 1, detail::render(r, p.format, opt.timing), p.out};
  } catch (const std::exception& e) {
    return detail::failure(opt, e, "verify");
  }
}

inline CommandOutput cmd_recurrence(const Options& opt) {
  try {
    const auto p = detail::prepare(opt);
    try {
      std::vector<std::string> rows;
      const RunResult r =
          run_recurrence(p.cfg, p.grid_override, p.threads, p.format == Format::csv ? &rows : nullptr);
      std::string text;
      if (p.format == Format::csv) {
        for (const auto& row : rows) text += row + "\n";
        for (const auto& rep : r.reports)
          text += "# " + rep.kind + ",max_abs=" + fmt17(rep.max_abs) + ",n_points=" + std::to_string(rep.n_points) + "\n";
        if (r.extra.contains("coherence")) {
          const auto& c = r.extra["coherence"];
          text += "# coherence,residual=" + fmt17(c["residual"].get<double>()) +
                  ",budget=" + fmt17(c["budget"].get<double>()) +
                  ",coherent=" + (c["coherent"].get<bool>() ? "true" : "false") + "\n";
        }
        text += std::string("# pass=") + (r.pass ? "true" : "false") + "\n";
      } else {
        text = to_json_text(r, opt.timing);
      }
      return {r.pass ? 0 : 1, text, p.out};
    } catch (const std::exception& e) {
      logger()->error("recurrence: {}", e.what());
      RunResult r;
      r.family = "recurrence";
      r.stencil = p.cfg.stencil;
      r.errors.push_back(error_record(e));
      return {2, detail::render(r, p.format, opt.timing), p.out};
    }
  } catch (const std::exception& e) {
    return detail::failure(opt, e, "recurrence");
  }
}

/// x,y,z,u,residual rows (Toda residual); cells of unusable points are empty.
inline CommandOutput cmd_sample(const Options& opt) {
  try {
    const auto p = detail::prepare(opt);
    if (p.cfg.family == Family::recurrence)
      throw Error(ErrorKind::RangeError, "sample needs a field family (use the recurrence command)");
    const FamilyHandle h = build_family(p.cfg, p.cfg.family);
    const Grid3 g = resolve_grid(p.cfg, h, p.grid_override);
    g.validate();
    const std::size_t n = g.total();
    std::vector<std::optional<double>> uv(n), rv(n);
    parallel_for(n, p.threads, [&](std::size_t i) {
      const Point3 q = g.point(i);
      try {
        uv[i] = h.u(q);
        rv[i] = toda_residual(h.u, q, p.cfg.stencil);
      } catch (const Error& e) {
        if (!is_pointwise_failure(e.kind())) throw;
      }
    });
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < n; ++i) skipped += rv[i] ? 0 : 1;
    logger()->info("sample: {} points, {} skipped", n, skipped);
    std::string text;
    if (p.format == Format::csv) {
      text = "x,y,z,u,residual\n";
      for (std::size_t i = 0; i < n; ++i) {
        const Point3 q = g.point(i);
        text += fmt17(q.x) + "," + fmt17(q.y) + "," + fmt17(q.z) + "," + (uv[i] ? fmt17(*uv[i]) : "") + "," +
                (rv[i] ? fmt17(*rv[i]) : "") + "\n";
      }
      text += "# skipped=" + std::to_string(skipped) + "\n";
    } else {
      json rows = json::array();
      for (std::size_t i = 0; i < n; ++i) {
        const Point3 q = g.point(i);
        rows.push_back({num(q.x), num(q.y), num(q.z), uv[i] ? num(*uv[i]) : json(nullptr),
                        rv[i] ? num(*rv[i]) : json(nullptr)});
      }
      json j{{"family", h.name}, {"grid", grid_json(g)}, {"stencil", stencil_json(p.cfg.stencil)},
             {"columns", {"x", "y", "z", "u", "residual"}}, {"rows", rows}, {"n_skipped", skipped}};
      text = j.dump(2) + "\n";
    }
    return {0, text, p.out};
  } catch (const std::exception& e) {
    return detail::failure(opt, e, "sample");
  }
}

struct RefinementRow {
  double step;
  double max_abs;
  std::optional<double> order;
};

struct RefinementResult {
  std::vector<RefinementRow> rows;
  bool exact = false;
  bool pass = false;
  std::size_t n_points = 0;
};

/// Values v_h(p) at every usable grid point for each step; points failing at
/// any step are dropped everywhere. Orders come from successive differences,
/// so they are meaningful whether v tends to zero or to a nonzero limit.
inline RefinementResult fd_refinement(const ScalarField3& u, const Grid3& g, const StencilConfig& base,
                                      const std::vector<double>& hs, const std::string& quantity,
                                      double expected, double band, unsigned threads,
                                      double noise_floor = 1e-10) {
  if (hs.size() < 3) throw Error(ErrorKind::RangeError, "sweep needs at least 3 step values");
  for (std::size_t i = 0; i + 1 < hs.size(); ++i)
    if (!(hs[i + 1] < hs[i]) || !(hs[i + 1] > 0.0))
      throw Error(ErrorKind::RangeError, "sweep steps must be positive and strictly decreasing");
  const std::size_t n = g.total(), m = hs.size();
  std::vector<std::vector<std::optional<double>>> v(m, std::vector<std::optional<double>>(n));
  for (std::size_t s = 0; s < m; ++s) {
    const StencilConfig c = base.with_h(hs[s]);
    parallel_for(n, threads, [&](std::size_t i) {
      const Point3 p = g.point(i);
      try {
        if (quantity == "dx") v[s][i] = central_diff(u, p, Axis::x, c);
        else if (quantity == "dzz") v[s][i] = second_diff(u, p, Axis::z, c);
        else if (quantity == "dxy") v[s][i] = mixed_diff_xy(u, p, c);
        else v[s][i] = toda_residual(u, p, c);
      } catch (const Error& e) {
        if (!is_pointwise_failure(e.kind())) throw;
      }
    });
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (std::size_t s = 0; s < m; ++s) ok = ok && v[s][i].has_value();
    if (ok) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorKind::AllPointsSkipped, "no grid point usable at every step");
  RefinementResult out;
  out.n_points = keep.size();
  std::vector<double> diff(m - 1, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    double mx = 0.0;
    for (std::size_t i : keep) mx = std::max(mx, std::abs(*v[s][i]));
    out.rows.push_back({hs[s], mx, std::nullopt});
    if (s + 1 < m)
      for (std::size_t i : keep) diff[s] = std::max(diff[s], std::abs(*v[s][i] - *v[s + 1][i]));
  }
  out.exact = std::all_of(diff.begin(), diff.end(), [&](double d) { return d <= noise_floor; });
  out.pass = true;
  if (out.exact) return out;
  for (std::size_t s = 2; s < m; ++s) {
    if (diff[s - 1] <= noise_floor) {
      out.pass = false;  // stalled at round-off partway: the band can not be checked
      continue;
    }
    const double ord = std::log(diff[s - 2] / diff[s - 1]) / std::log(hs[s - 2] / hs[s - 1]);
    out.rows[s].order = ord;
    out.pass = out.pass && std::abs(ord - expected) <= band;
  }
  return out;
}

/// Discrete-chain residual of rho = ln u at each eps; orders from the
/// residual magnitudes (the residual tends to zero).
inline RefinementResult discrete_refinement(const ScalarField3& u, const Grid3& g, const StencilConfig& cfg,
                                            const std::vector<double>& eps, double expected, double band,
                                            double exact_tol, unsigned threads) {
  if (eps.size() < 3) throw Error(ErrorKind::RangeError, "discrete-limit needs at least 3 eps values");
  for (std::size_t i = 0; i + 1 < eps.size(); ++i)
    if (!(eps[i + 1] < eps[i]) || !(eps[i + 1] > 0.0))
      throw Error(ErrorKind::RangeError, "eps values must be positive and strictly decreasing");
  const ScalarField3 rho = log_field(u);
  const std::size_t n = g.total(), m = eps.size();
  std::vector<std::vector<std::optional<double>>> v(m, std::vector<std::optional<double>>(n));
  for (std::size_t s = 0; s < m; ++s)
    parallel_for(n, threads, [&](std::size_t i) {
      try {
        v[s][i] = discrete_chain_residual(rho, g.point(i), eps[s], cfg);
      } catch (const Error& e) {
        if (!is_pointwise_failure(e.kind())) throw;
      }
    });
  RefinementResult out;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (std::size_t s = 0; s < m; ++s) ok = ok && v[s][i].has_value();
    if (ok) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorKind::AllPointsSkipped, "no grid point usable at every eps");
  out.n_points = keep.size();
  for (std::size_t s = 0; s < m; ++s) {
    double mx = 0.0;
    for (std::size_t i : keep) mx = std::max(mx, std::abs(*v[s][i]));
    out.rows.push_back({eps[s], mx, std::nullopt});
  }
  out.exact = std::all_of(out.rows.begin(), out.rows.end(), [&](const RefinementRow& r) { return r.max_abs < exact_tol; });
  out.pass = true;
  if (out.exact) return out;
  for (std::size_t s = 1; s < m; ++s) {
    const double a = out.rows[s - 1].max_abs, b = out.rows[s].max_abs;
    if (!(b > 0.0)) {
      out.pass = false;
      continue;
    }
    const double ord = std::log(a / b) / std::log(eps[s - 1] / eps[s]);
    out.rows[s].order = ord;
    out.pass = out.pass && std::abs(ord - expected) <= band;
  }
  return out;
}

namespace detail {

inline std::string refinement_text(const RefinementResult& r, const char* step_name, Format f,
                                   const std::string& family, const std::string& quantity,
                                   const StencilConfig& st, const Grid3& g, double expected, double band) {
  if (f == Format::csv) {
    std::string t = std::string(step_name) + ",max_abs,observed_order\n";
    for (const auto& row : r.rows)
      t += fmt17(row.step) + "," + fmt17(row.max_abs) + "," + (row.order ? fmt17(*row.order) : "") + "\n";
    if (r.exact) t += "# exact\n";
    t += std::string("# pass=") + (r.pass ? "true" : "false") + "\n";
    return t;
  }
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{step_name, num(row.step)}, {"max_abs", num(row.max_abs)},
                        {"observed_order", row.order ? num(*row.order) : json(nullptr)}});
  json j{{"family", family},     {"quantity", quantity},           {"grid", grid_json(g)},
         {"stencil", stencil_json(st)}, {"expected_order", num(expected)}, {"band", num(band)},
         {"n_points", r.n_points}, {"rows", rows},                 {"exact", r.exact},
         {"pass", r.pass},         {"errors", json::array()}};
  return j.dump(2) + "\n";
}

}  // namespace detail

inline CommandOutput cmd_sweep(const Options& opt) {
  try {
    const auto p = detail::prepare(opt);
    if (p.cfg.family == Family::recurrence) throw Error(ErrorKind::RangeError, "sweep needs a field family");
    const FamilyHandle h = build_family(p.cfg, p.cfg.family);
    const Grid3 g = resolve_grid(p.cfg, h, p.grid_override);
    g.validate();
    const auto& sw = p.cfg.sweep;
    const double expected = sw.expected_order.value_or(p.cfg.stencil.order);
    const double band = sw.band.value_or(p.cfg.stencil.order == 2 ? 0.1 : 0.2);
    const auto r = fd_refinement(h.u, g, p.cfg.stencil, sw.h, sw.quantity, expected, band, p.threads);
    logger()->info("sweep: {} {} {}", h.name, sw.quantity, r.exact ? "exact" : (r.pass ? "pass" : "fail"));
    return {r.pass ? 0 : 1,
            detail::refinement_text(r, "h", p.format, h.name, sw.quantity, p.cfg.stencil, g, expected, band), p.out};
  } catch (const std::exception& e) {
    return detail::failure(opt, e, "sweep");
  }
}

inline CommandOutput cmd_discrete_limit(const Options& opt) {
  try {
    const auto p = detail::prepare(opt);
    if (p.cfg.family == Family::recurrence)
      throw Error(ErrorKind::RangeError, "discrete-limit needs a field family");
    const FamilyHandle h = build_family(p.cfg, p.cfg.family);
    const Grid3 g = resolve_grid(p.cfg, h, p.grid_override);
    g.validate();
    const auto& d = p.cfg.discrete;
    const auto r = discrete_refinement(h.u, g, p.cfg.stencil, d.eps, d.expected_order, d.band, d.exact_tol, p.threads);
    logger()->info("discrete-limit: {} {}", h.name, r.exact ? "exact" : (r.pass ? "pass" : "fail"));
    return {r.pass ? 0 : 1,
            detail::refinement_text(r, "eps", p.format, h.name, "discrete_chain", p.cfg.stencil, g,
                                    d.expected_order, d.band),
            p.out};
  } catch (const std::exception& e) {
    return detail::failure(opt, e, "discrete-limit");
  }
}

inline CommandOutput run_command(const std::string& command, const Options& opt) {
  if (command == "verify") return cmd_verify(opt);
  if (command == "sample") return cmd_sample(opt);
  if (command == "sweep") return cmd_sweep(opt);
  if (command == "recurrence") return cmd_recurrence(opt);
  if (command == "discrete-limit") return cmd_discrete_limit(opt);
  return detail::failure(opt, Error(ErrorKind::ParseError, "unknown command '" + command + "'"), "toda_cli");
}

}  // namespace toda::cli
