#include "roughdrive/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "roughdrive/csv.hpp"
#include "roughdrive/errors.hpp"
#include "roughdrive/experiments.hpp"
#include "roughdrive/rng.hpp"
#include "roughdrive/spde_sim.hpp"

namespace roughdrive {

using nlohmann::json;

namespace {

GSpec parse_g(const json& j, std::vector<std::string>& errors) {
  GSpec g;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    auto number_after = [&](std::size_t prefix) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s.substr(prefix), &used);
        if (used != s.size() - prefix) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        errors.push_back("g: cannot read a number in \"" + s + "\"");
        return 0.0;
      }
    };
    if (s == "sin") {
      g.kind = GSpec::Kind::sine;
    } else if (s.rfind("const:", 0) == 0) {
      g.kind = GSpec::Kind::constant;
      g.value = number_after(6);
    } else if (s.rfind("linear:", 0) == 0) {
      g.kind = GSpec::Kind::linear;
      g.value = number_after(7);
    } else {
      errors.push_back("g: expected \"sin\", \"const:<c>\", \"linear:<slope>\" or a table, got \"" + s + "\"");
    }
    return g;
  }
  if (j.is_object() && j.contains("x") && j.contains("y")) {
    g.kind = GSpec::Kind::table;
    try {
      g.xs = j.at("x").get<std::vector<double>>();
      g.ys = j.at("y").get<std::vector<double>>();
    } catch (const json::exception&) {
      errors.push_back("g: table x and y must be arrays of numbers");
      return g;
    }
    if (g.xs.size() < 2 || g.xs.size() != g.ys.size())
      errors.push_back("g: table needs at least 2 points and equal-length x and y");
    for (std::size_t i = 1; i < g.xs.size(); ++i)
      if (!(g.xs[i] > g.xs[i - 1])) {
        errors.push_back("g: table x must be strictly increasing");
        break;
      }
    return g;
  }
  errors.push_back("g: expected a string or a table {\"x\": [...], \"y\": [...]}");
  return g;
}

template <class T>
void read(const json& doc, const char* key, T& out, std::vector<std::string>& errors) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(std::string(key) + ": wrong type");
  }
}

void check(const RunConfig& c, std::vector<std::string>& errors) {
  if (!(c.H > 0.0 && c.H <= 0.25))
    errors.push_back("H: must lie in (0, 1/4] (Dalang's condition 1 < alpha <= 2 fails otherwise)");
  if (!(c.T > 0)) errors.push_back("T: must be positive");
  if (!std::isfinite(c.Y0)) errors.push_back("Y0: must be finite");
  if (c.n_replicas < 1) errors.push_back("n_replicas: must be at least 1");
  if (!(c.delta > 0)) errors.push_back("delta: must be positive");
  if (c.lag_count < 6) errors.push_back("lag_count: at least 6 dyadic lags are needed to span 1.5 decades");
  if (c.lag_multiple < 4) errors.push_back("lag_multiple: smallest lag must be at least 4 dt");
  if (c.experiments.empty()) errors.push_back("experiments: list at least one experiment");
  const auto& known = registered_experiments();
  for (const auto& e : c.experiments)
    if (std::find(known.begin(), known.end(), e) == known.end())
      errors.push_back("experiments: unknown experiment \"" + e + "\"");
  if (c.output_dir.empty()) errors.push_back("output_dir: must not be empty");

  if (c.H > 0.0 && c.H <= 0.25) {
    const ModelParams p = derive_params(c.H, c.Y0, c.T > 0 ? c.T : 1.0);
    if (c.b_exponent && !(*c.b_exponent > p.H && *c.b_exponent < p.G_H))
      errors.push_back("b_exponent: must lie strictly between H and G_H");
  }
  if (c.T > 0 && c.dt > 0) {
    const double tp = c.probe_time();
    if (tp < c.T / 2 || tp >= c.T) errors.push_back("t_probe: must lie in [T/2, T)");
    if (c.lag_count >= 1 && c.lag_multiple >= 1 && c.lag_count < 60) {
      const double largest = c.lags().front();
      if (tp + largest > c.T * (1 + 1e-12)) errors.push_back("lags: t_probe + largest lag exceeds T");
    }
    try {
      if (c.lag_count < 60) spde::GridConfig::make(c.L, c.N, c.dt, c.T, c.record_times());
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) errors.push_back("grid: " + v);
    }
  } else {
    errors.push_back("dt: must be positive");
  }
}

}  // namespace

std::string GSpec::describe() const {
  switch (kind) {
    case Kind::sine:
      return "sin";
    case Kind::constant:
      return "const:" + csv::format_double(value);
    case Kind::linear:
      return "linear:" + csv::format_double(value);
    case Kind::table:
      return "table";
  }
  return "?";
}

RealFn GSpec::function() const {
  switch (kind) {
    case Kind::sine:
      return [](double y) { return std::sin(y); };
    case Kind::constant:
      return [c = value](double) { return c; };
    case Kind::linear:
      return [s = value](double y) { return s * y; };
    case Kind::table:
      return [xs = xs, ys = ys](double y) {
        if (y <= xs.front()) return ys.front();
        if (y >= xs.back()) return ys.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), y);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double w = (y - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
      };
  }
  return {};
}

double GSpec::lipschitz() const {
  switch (kind) {
    case Kind::sine:
      return 1.0;
    case Kind::constant:
      return 0.0;
    case Kind::linear:
      return std::fabs(value);
    case Kind::table: {
      double lip = 0;
      for (std::size_t i = 1; i < xs.size(); ++i)
        lip = std::max(lip, std::fabs((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])));
      return lip;
    }
  }
  return 0;
}

double RunConfig::b() const {
  if (b_exponent) return *b_exponent;
  const ModelParams p = derive_params(H, Y0, T);
  return (p.H + p.G_H) / 2;
}

std::vector<double> RunConfig::lags() const { return experiments::dyadic_lags(dt, lag_multiple, lag_count); }

std::vector<double> RunConfig::record_times() const {
  std::vector<double> t{probe_time()};
  for (double eps : lags()) t.push_back(probe_time() + eps);
  if (std::find(experiments.begin(), experiments.end(), "linear_law") != experiments.end())
    t.insert(t.end(), {T / 4, T / 2, T});
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

std::string RunConfig::to_json() const {
  json j;
  j["H"] = H;
  if (g.kind == GSpec::Kind::table)
    j["g"] = json{{"x", g.xs}, {"y", g.ys}};
  else
    j["g"] = g.describe();
  j["Y0"] = Y0;
  j["T"] = T;
  j["L"] = L;
  j["N"] = N;
  j["dt"] = dt;
  j["n_replicas"] = n_replicas;
  j["seed"] = seed;
  j["experiments"] = experiments;
  j["output_dir"] = output_dir;
  j["delta"] = delta;
  j["b_exponent"] = b();
  j["t_probe"] = probe_time();
  j["lag_count"] = lag_count;
  j["lag_multiple"] = lag_multiple;
  return j.dump();
}

std::string RunConfig::hash() const {
  // where results are written does not change them
  json j = json::parse(to_json());
  j.erase("output_dir");
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << rng::fnv1a(j.dump());
  return os.str();
}

const std::vector<std::string>& registered_experiments() {
  static const std::vector<std::string> names{
      "constants",   "kernel_identities", "cov_decomposition", "linear_law",
      "fbm_increments", "holder_slope",   "correction_rate",   "weak_solution"};
  return names;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});

  static const std::vector<std::string> keys{"H",      "g",           "Y0",         "T",          "L",
                                             "N",      "dt",          "n_replicas", "seed",       "experiments",
                                             "output_dir", "delta",   "b_exponent", "t_probe",    "lag_count",
                                             "lag_multiple"};
  std::vector<std::string> errors;
  for (const auto& [k, v] : doc.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) errors.push_back(k + ": unknown field");

  RunConfig c;
  c.experiments = registered_experiments();
  read(doc, "H", c.H, errors);
  if (doc.contains("g")) c.g = parse_g(doc.at("g"), errors);
  read(doc, "Y0", c.Y0, errors);
  read(doc, "T", c.T, errors);
  read(doc, "L", c.L, errors);
  read(doc, "N", c.N, errors);
  read(doc, "dt", c.dt, errors);
  read(doc, "n_replicas", c.n_replicas, errors);
  if (!doc.contains("seed"))
    errors.push_back("seed: missing (seeds are mandatory for reproducibility)");
  else
    read(doc, "seed", c.seed, errors);
  read(doc, "experiments", c.experiments, errors);
  read(doc, "output_dir", c.output_dir, errors);
  read(doc, "delta", c.delta, errors);
  if (doc.contains("b_exponent")) {
    double b = 0;
    read(doc, "b_exponent", b, errors);
    c.b_exponent = b;
  }
  if (doc.contains("t_probe")) {
    double t = 0;
    read(doc, "t_probe", t, errors);
    c.t_probe = t;
  }
  read(doc, "lag_count", c.lag_count, errors);
  read(doc, "lag_multiple", c.lag_multiple, errors);

  check(c, errors);
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& cfg) {
  std::vector<std::string> errors;
  check(cfg, errors);
  if (!errors.empty()) throw ConfigError(errors);
}

}  // namespace roughdrive
