// roughdrive command-line front end.
//
//   roughdrive params --H 0.25
//   roughdrive kernel --alpha 1.6667 --out p1.csv
//   roughdrive simulate --config run.json [--seed N] [--out dir]
//   roughdrive verify --config run.json --experiment holder_slope
//   roughdrive all --config run.json
//
// Exit codes: 0 all experiments pass, 1 an experiment failed, 2 bad configuration.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "roughdrive/config.hpp"
#include "roughdrive/csv.hpp"
#include "roughdrive/errors.hpp"
#include "roughdrive/runner.hpp"
#include "roughdrive/spde_sim.hpp"
#include "roughdrive/stable_kernel.hpp"

namespace rd = roughdrive;

namespace {

constexpr int kExitConfig = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool serial = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->required();
  cmd->add_option("--seed", f.seed, "override the configured seed");
  cmd->add_option("--out", f.out, "override the output directory");
  cmd->add_flag("--serial", f.serial, "single-threaded execution");
}

rd::RunConfig resolve(const RunFlags& f) {
  rd::RunConfig cfg = rd::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;
  rd::validate(cfg);
  return cfg;
}

int print_params(double H) {
  const rd::ModelParams p = rd::derive_params(H);
  using rd::csv::format_double;
  std::cout << "H=" << format_double(p.H) << '\n'
            << "alpha=" << format_double(p.alpha) << '\n'
            << "K=" << format_double(p.K) << '\n'
            << "kappa_H=" << format_double(p.kappa_H) << '\n'
            << "c_alpha=" << format_double(p.c_alpha) << '\n'
            << "G_H=" << format_double(p.G_H) << '\n'
            << "a=" << format_double(p.a_split) << '\n';
  return 0;
}

int write_kernel(double alpha, std::size_t resolution, const std::string& out) {
  const auto table = rd::kernel::build_table(alpha, resolution);
  if (out.empty()) {
    rd::kernel::write_table_csv(std::cout, table);
  } else {
    std::ofstream os(out, std::ios::binary);
    rd::kernel::write_table_csv(os, table);
  }
  std::cerr << "mass=" << table.total_mass() << '\n';
  return 0;
}

int simulate(const RunFlags& f) {
  const rd::RunConfig cfg = resolve(f);
  const rd::ModelParams p = rd::derive_params(cfg.H, cfg.Y0, cfg.T);
  const rd::DriftPair drift = rd::make_drift_pair(cfg.g.function(), p, cfg.g.lipschitz());
  const auto grid = rd::spde::GridConfig::make(cfg.L, cfg.N, cfg.dt, cfg.T, cfg.record_times());
  const auto exec = f.serial ? rd::Exec::serial : rd::Exec::parallel;
  const auto trace = rd::spde::simulate_coupled(grid, p, drift, cfg.seed, cfg.n_replicas, {exec, 1.0});
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / "trace.csv";
  std::ofstream os(path, std::ios::binary);
  rd::spde::write_trace_csv(os, trace);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int verify(const RunFlags& f, const std::vector<std::string>& only) {
  rd::RunConfig cfg = resolve(f);
  if (!only.empty()) {
    cfg.experiments = only;
    rd::validate(cfg);
  }
  return rd::run(cfg, std::cout, f.serial ? rd::Exec::serial : rd::Exec::parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rough-driver SDE experiments via the fractional stochastic heat equation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ROUGHDRIVE_VERSION));

  double H = 0.25;
  auto* params = app.add_subcommand("params", "print the derived model constants");
  params->add_option("--H", H, "Hurst exponent in (0, 1/4]");

  double alpha = 2.0;
  std::size_t resolution = 5001;
  std::string kernel_out;
  auto* kernel = app.add_subcommand("kernel", "tabulate the stable density p_1");
  kernel->add_option("--alpha", alpha, "stability index in (1, 2]");
  kernel->add_option("--resolution", resolution, "table points on [0, 50]");
  kernel->add_option("--out", kernel_out, "CSV path (default stdout)");

  RunFlags sim_flags, verify_flags, all_flags;
  std::vector<std::string> selected;
  auto* sim = app.add_subcommand("simulate", "run the coupled simulation and dump trace.csv");
  add_run_flags(sim, sim_flags);
  auto* ver = app.add_subcommand("verify", "run selected experiments");
  add_run_flags(ver, verify_flags);
  ver->add_option("--experiment", selected, "experiment name (repeatable)")->required();
  auto* all = app.add_subcommand("all", "run every experiment listed in the config");
  add_run_flags(all, all_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*params) return print_params(H);
    if (*kernel) return write_kernel(alpha, resolution, kernel_out);
    if (*sim) return simulate(sim_flags);
    if (*ver) return verify(verify_flags, selected);
    if (*all) return verify(all_flags, {});
  } catch (const rd::ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return kExitConfig;
  } catch (const rd::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
