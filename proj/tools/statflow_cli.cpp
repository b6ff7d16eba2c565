// Experiment runner. One subcommand per experiment; prints the JSON report on
// stdout and, with --out, writes the report, CSV tables and grid dumps.
//
// Exit status: 0 all tolerances met, 2 tolerance failure, 1 usage error,
// 3 numerical failure (domain or internal error).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "statflow/experiments.hpp"
#include "statflow/grid_io.hpp"
#include "statflow/stencil.hpp"

namespace fs = std::filesystem;
namespace ex = statflow::experiments;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitTolerance = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::vector<std::string> params;
  std::uint64_t seed = 42;
  int workers = 1;
  std::string out;
  bool heatmaps = false;
  std::vector<int> snapshots;
};

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw statflow::UsageError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw statflow::UsageError("config " + path + " is not valid JSON: " + e.what());
  }
}

/// key=value; the value is read as JSON when it parses, else as a string.
void apply_param(json& params, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw statflow::UsageError("--param expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
  json v = json::parse(value, nullptr, false);
  params[key] = v.is_discarded() ? json(value) : v;
}

ex::ExperimentConfig build_config(const std::string& command, const Options& o, const CLI::App& app) {
  ex::ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    json j = load_json(o.config_path);
    if (!j.contains("command")) j["command"] = command;
    cfg = ex::ExperimentConfig::from_json(j);
    if (cfg.command != command)
      throw statflow::UsageError("config is for '" + cfg.command + "' but the subcommand is '" + command + "'");
  }
  cfg.command = command;
  if (o.config_path.empty() || app.count("--seed")) cfg.context.seed = o.seed;
  if (o.config_path.empty() || app.count("--workers")) cfg.context.workers = o.workers;
  if (o.config_path.empty() || app.count("--snapshots")) cfg.context.snapshots = o.snapshots;
  for (const std::string& kv : o.params) apply_param(cfg.params, kv);
  cfg.validate();
  return cfg;
}

void write_outputs(const ex::ExperimentConfig& cfg, const ex::ExperimentResult& r, const json& report,
                   const Options& o) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ofstream(dir / "report.json") << std::setw(2) << report << '\n';
  for (const auto& t : r.tables) {
    std::ofstream out(dir / (t.name + ".csv"), std::ios::binary);
    t.write_csv(out);
  }
  for (const auto& [name, grid] : r.grids) {
    statflow::write_grid(grid, dir / (cfg.command + "_" + name));
    if (o.heatmaps && grid.dim() >= 2) statflow::write_pgm(grid, dir / (cfg.command + "_" + name + ".pgm"));
  }
}

int dump_stencil(int dim, double h, int samples, const std::string& kind) {
  const auto s = statflow::build_stencil(dim, h, samples, statflow::stencil_kind_from_string(kind));
  statflow::write_stencil_csv(s, std::cout);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical exponential-formula experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "JSON experiment config");
  app.add_option("--param", o.params, "parameter override key=value (repeatable)");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "output directory for report, CSV tables and grid dumps");
  app.add_flag("--emit-heatmaps", o.heatmaps, "also write PGM heatmaps of result grids");
  app.add_option("--snapshots", o.snapshots, "step indices to keep (comma separated)")->delimiter(',');

  std::string command;
  for (const std::string& name : ex::commands())
    app.add_subcommand(name, "run the " + name + " experiment")->callback([&command, name] { command = name; });

  int s_dim = 2, s_samples = 64;
  double s_h = 0.01;
  std::string s_kind = "uniform-circle";
  auto* stencil = app.add_subcommand("stencil", "print a sphere stencil as CSV");
  stencil->add_option("--dim", s_dim, "dimension")->check(CLI::Range(1, 3));
  stencil->add_option("--step", s_h, "step h (radius sqrt(2h))");
  stencil->add_option("--samples", s_samples, "sample count K");
  stencil->add_option("--kind", s_kind, "uniform-circle | gauss-azimuth-3d | symmetrized-fibonacci-3d");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (stencil->parsed()) return dump_stencil(s_dim, s_h, s_samples, s_kind);
    const ex::ExperimentConfig cfg = build_config(command, o, app);
    const ex::ExperimentResult result = ex::run(cfg);
    const json report = ex::report(cfg, result);
    if (!o.out.empty()) write_outputs(cfg, result, report, o);
    std::cout << std::setw(2) << report << '\n';
    for (const std::string& f : result.failures) std::cerr << "FAIL: " << f << '\n';
    return result.pass ? kExitPass : kExitTolerance;
  } catch (const statflow::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
