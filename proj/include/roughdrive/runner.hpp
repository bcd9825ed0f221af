#pragma once

// Experiment orchestration: runs the configured experiments in order and
// writes manifest.json, <experiment>.csv and <experiment>.plot.dat.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "roughdrive/config.hpp"
#include "roughdrive/exec.hpp"
#include "roughdrive/params.hpp"

namespace roughdrive {

struct ExperimentResult {
  std::string name;
  bool pass = false;
  std::string error;     ///< non-empty when the experiment threw
  double seconds = 0;
  std::string record;    ///< JSON object with the experiment's numbers
  std::string csv;       ///< full CSV text, version line first
  std::string plot;      ///< "log10(eps) log10(moment)" lines, empty if not a rate fit
};

struct RunManifest {
  RunConfig config;
  ModelParams params;
  std::vector<ExperimentResult> results;
  std::vector<std::string> artifacts;
  double wall_seconds = 0;
  std::string version;

  bool all_pass() const;
  int exit_code() const { return all_pass() ? 0 : 1; }
  std::string to_json() const;
};

/// Runs cfg.experiments in declaration order. Nothing is written to disk.
RunManifest run_experiments(const RunConfig& cfg, std::ostream& log, Exec exec = Exec::parallel);

/// run_experiments plus artifacts under cfg.output_dir; returns the exit code
/// (0 all pass, 1 some experiment failed).
int run(const RunConfig& cfg, std::ostream& log, Exec exec = Exec::parallel);

}  // namespace roughdrive
