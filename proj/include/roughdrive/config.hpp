#pragma once

// Run configuration: a JSON document validated into RunConfig.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roughdrive/params.hpp"

namespace roughdrive {

/// The drift g: "const:<c>", "sin", "linear:<slope>", or a piecewise-linear
/// table {"x": [...], "y": [...]} held constant outside its range.
struct GSpec {
  enum class Kind { constant, sine, linear, table };
  Kind kind = Kind::sine;
  double value = 0;  ///< constant or slope
  std::vector<double> xs, ys;

  std::string describe() const;
  RealFn function() const;
  double lipschitz() const;
};

struct RunConfig {
  double H = 0.25;
  GSpec g;
  double Y0 = 0.0;  ///< initial value of u; the limit process starts at kappa_H * Y0
  double T = 1.0;
  double L = 16.0;
  std::size_t N = 2048;
  double dt = 1.0 / 2048;
  std::size_t n_replicas = 10000;
  std::uint64_t seed = 0;
  std::vector<std::string> experiments;
  std::string output_dir = "out";

  double delta = 0.5;
  std::optional<double> b_exponent;  ///< default (H + G_H) / 2
  std::optional<double> t_probe;     ///< default T / 2
  std::size_t lag_count = 6;
  std::size_t lag_multiple = 4;      ///< smallest lag in units of dt

  double probe_time() const { return t_probe.value_or(T / 2); }
  double b() const;
  std::vector<double> lags() const;
  /// t_probe and t_probe + each lag, plus T/4, T/2, T when linear_law is requested.
  std::vector<double> record_times() const;

  /// Canonical JSON echo (every field, defaults filled in).
  std::string to_json() const;
  /// FNV-1a of to_json() without output_dir, 16 hex digits.
  std::string hash() const;
};

/// Names accepted in "experiments", in their canonical order.
const std::vector<std::string>& registered_experiments();

/// Parses and validates; throws ConfigError listing every violation.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks an already-built config (e.g. after a --seed override).
void validate(const RunConfig& cfg);

}  // namespace roughdrive
