// toda_cli: verify, sample, sweep, recurrence, discrete-limit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "toda/cli/commands.hpp"

namespace {

int emit(const toda::cli::CommandOutput& r) {
  if (r.out_path.empty()) {
    std::cout << r.text << std::flush;
    return r.exit_code;
  }
  std::ofstream out(r.out_path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << r.text) || !out.flush()) {
    std::cerr << "IoError: cannot write '" << r.out_path << "'\n";
    return 2;
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous Toda chain solution families and residual verification"};
  app.require_subcommand(1, 1);

  toda::cli::Options opt;
  std::string out, format, grid;
  double tol = 0.0;
  unsigned threads = 0;

  const char* names[] = {"verify", "sample", "sweep", "recurrence", "discrete-limit"};
  const char* help[] = {"residual reports for the configured family (exit 0 pass, 1 fail, 2 error)",
                        "x,y,z,u,residual samples on the grid",
                        "h-refinement study with observed orders",
                        "alpha-chain, consistency and truncation coherence",
                        "eps-refinement of the discrete-chain residual"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", opt.config_path, "config file (key = value, [sections])")->required();
    sub->add_option("--out", out, "output path (default stdout)");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--tol", tol, "tolerance override")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads (default: hardware)");
    sub->add_option("--grid", grid, "x0:x1:nx,y0:y1:ny,z0:z1:nz");
    sub->add_flag("--timing", opt.timing, "record wall_ms (breaks byte-identical output)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--format")) opt.format = format == "csv" ? toda::cli::Format::csv : toda::cli::Format::json;
  if (sub->count("--tol")) opt.tol = tol;
  if (sub->count("--grid")) opt.grid = grid;
  opt.threads = threads;

  try {
    return emit(toda::cli::run_command(sub->get_name(), opt));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
