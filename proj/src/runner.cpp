#include "roughdrive/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "roughdrive/csv.hpp"
#include "roughdrive/errors.hpp"
#include "roughdrive/experiments.hpp"
#include "roughdrive/fields.hpp"
#include "roughdrive/spde_sim.hpp"

namespace roughdrive {

using nlohmann::json;
namespace ex = experiments;

namespace {

using Clock = std::chrono::steady_clock;

// Simulations shared by the experiments of one run, built on first use.
class Context {
 public:
  Context(const RunConfig& cfg, Exec exec)
      : cfg_(cfg),
        exec_(exec),
        params_(derive_params(cfg.H, cfg.Y0, cfg.T)),
        drift_(make_drift_pair(cfg.g.function(), params_, cfg.g.lipschitz())),
        grid_(spde::GridConfig::make(cfg.L, cfg.N, cfg.dt, cfg.T, cfg.record_times())) {}

  const RunConfig& cfg() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  const DriftPair& drift() const { return drift_; }
  Exec exec() const { return exec_; }

  const spde::CoupledTrace& coupled() {
    if (!coupled_)
      coupled_ = spde::simulate_coupled(grid_, params_, drift_, cfg_.seed, cfg_.n_replicas, {exec_, 1.0});
    return *coupled_;
  }

  const PathSample& linear() {
    if (coupled_) return coupled_->v0;
    if (!linear_) linear_ = spde::simulate_linear(grid_, params_, cfg_.seed, cfg_.n_replicas, {exec_, 1.0});
    return *linear_;
  }

 private:
  RunConfig cfg_;
  Exec exec_;
  ModelParams params_;
  DriftPair drift_;
  spde::GridConfig grid_;
  std::optional<spde::CoupledTrace> coupled_;
  std::optional<PathSample> linear_;
};

std::string fmt(double v) { return csv::format_double(v); }

std::string csv_head(const Context& ctx, const std::string& columns) {
  std::ostringstream os;
  os << csv::kVersionLine << '\n';
  os << "# seed=" << ctx.cfg().seed << " config_hash=" << ctx.cfg().hash()
     << " n_replicas=" << ctx.cfg().n_replicas << '\n';
  os << columns << '\n';
  return os.str();
}

std::string plot_lines(const std::vector<double>& eps, const std::vector<double>& m) {
  std::ostringstream os;
  for (std::size_t k = 0; k < eps.size(); ++k)
    if (m[k] > 0) os << fmt(std::log10(eps[k])) << ' ' << fmt(std::log10(m[k])) << '\n';
  return os.str();
}

json fit_json(const ex::RateFit& f) {
  return json{{"epsilons", f.epsilons}, {"moments", f.moments},   {"ses", f.ses},
              {"slope", f.slope},       {"slope_se", f.slope_se}, {"pass", f.pass}};
}

void rate_csv(ExperimentResult& r, const Context& ctx, const ex::RateFit& f) {
  std::ostringstream os;
  os << csv_head(ctx, "epsilon,estimate,se");
  for (std::size_t k = 0; k < f.epsilons.size(); ++k)
    os << fmt(f.epsilons[k]) << ',' << fmt(f.moments[k]) << ',' << fmt(f.ses[k]) << '\n';
  r.csv = os.str();
  r.plot = plot_lines(f.epsilons, f.moments);
}

void metrics_csv(ExperimentResult& r, const Context& ctx, const std::vector<std::pair<std::string, double>>& m) {
  std::ostringstream os;
  os << csv_head(ctx, "metric,value");
  for (const auto& [k, v] : m) os << k << ',' << fmt(v) << '\n';
  r.csv = os.str();
}

json metrics_json(const std::vector<std::pair<std::string, double>>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void exp_constants(ExperimentResult& r, Context& ctx, json& rec) {
  const auto rep = ex::verify_constants(1000, ctx.cfg().seed);
  const std::vector<std::pair<std::string, double>> m{{"samples", static_cast<double>(rep.samples)},
                                                      {"max_kappa_gap", rep.max_kappa_gap},
                                                      {"max_roundtrip_gap", rep.max_roundtrip_gap},
                                                      {"max_split_gap", rep.max_split_gap},
                                                      {"min_ratio", rep.min_ratio},
                                                      {"max_ratio", rep.max_ratio}};
  rec["metrics"] = metrics_json(m);
  metrics_csv(r, ctx, m);
  r.pass = rep.pass;
}

void exp_kernel(ExperimentResult& r, Context& ctx, json& rec) {
  std::vector<std::pair<std::string, double>> m;
  r.pass = true;
  for (double alpha : {2.0, 5.0 / 3.0}) {
    const auto rep = ex::verify_kernel(alpha);
    const std::string tag = alpha == 2.0 ? "alpha2_" : "alpha5_3_";
    m.emplace_back(tag + "mass", rep.mass);
    m.emplace_back(tag + "l2_rel_error", rep.l2_rel_error);
    m.emplace_back(tag + "peak_rel_error", rep.peak_rel_error);
    m.emplace_back(tag + "chapman_kolmogorov_error", rep.chapman_kolmogorov_error);
    m.emplace_back(tag + "gaussian_max_error", rep.gaussian_max_error);
    r.pass = r.pass && rep.pass;
  }
  rec["metrics"] = metrics_json(m);
  metrics_csv(r, ctx, m);
}

void exp_cov(ExperimentResult& r, Context& ctx, json& rec) {
  const auto rep = ex::verify_cov_decomposition(ctx.params().H, TimeGrid::uniform(ctx.cfg().T / 20, ctx.cfg().T, 20));
  const std::vector<std::pair<std::string, double>> m{{"max_residual", rep.max_residual},
                                                      {"max_v_residual", rep.max_v_residual},
                                                      {"max_xi_quad_gap", rep.max_xi_quad_gap}};
  rec["metrics"] = metrics_json(m);
  metrics_csv(r, ctx, m);
  r.pass = rep.pass;
}

void exp_linear(ExperimentResult& r, Context& ctx, json& rec) {
  const auto rep = ex::verify_linear_law(ctx.linear(), ctx.params(), ctx.exec());
  rec["times"] = rep.times;
  rec["empirical"] = rep.empirical;
  rec["ses"] = rep.ses;
  rec["analytic"] = rep.analytic;
  rec["max_rel_error"] = rep.max_rel_error;
  rec["max_matrix_score"] = rep.max_matrix_score;
  rec["matrix_pass"] = rep.matrix_pass;
  std::ostringstream os;
  os << csv_head(ctx, "t,estimate,se,analytic");
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    os << fmt(rep.times[k]) << ',' << fmt(rep.empirical[k]) << ',' << fmt(rep.ses[k]) << ','
       << fmt(rep.analytic[k]) << '\n';
  r.csv = os.str();
  r.pass = rep.pass && rep.matrix_pass;
}

void exp_fbm(ExperimentResult& r, Context& ctx, json& rec) {
  const auto& tr = ctx.coupled();
  const PathSample X = fields::extract_fbm(tr.v0, tr.xi, ctx.params());
  const auto fit = ex::estimate_fbm_increments(X, ctx.params().H, ctx.cfg().probe_time(), ctx.exec());
  rec["fit"] = fit_json(fit);
  rate_csv(r, ctx, fit);
  r.pass = fit.pass;
}

void exp_holder(ExperimentResult& r, Context& ctx, json& rec) {
  const auto& tr = ctx.coupled();
  const auto fit = ex::estimate_holder_slope(tr.u0, ctx.params(), ctx.cfg().probe_time(), ctx.exec());
  rec["fit"] = fit_json(fit);
  rec["reference_slope"] = 2 * ctx.params().H;
  rate_csv(r, ctx, fit);
  r.pass = fit.pass;
}

void exp_correction(ExperimentResult& r, Context& ctx, json& rec) {
  const auto rep = ex::estimate_correction_rate(ctx.coupled(), ctx.drift(), ctx.cfg().probe_time(), ctx.exec());
  rec["correction"] = fit_json(rep.correction);
  rec["raw"] = fit_json(rep.raw);
  rec["reference_slope"] = rep.reference_slope;
  rec["degenerate_zero"] = rep.degenerate_zero;
  rec["max_abs_correction"] = rep.max_abs_correction;
  std::ostringstream os;
  os << csv_head(ctx, "epsilon,estimate,se,raw_estimate,raw_se");
  const auto& c = rep.correction;
  for (std::size_t k = 0; k < c.epsilons.size(); ++k) {
    os << fmt(c.epsilons[k]) << ',' << fmt(c.moments[k]) << ',' << fmt(c.ses[k]) << ',';
    if (k < rep.raw.moments.size())
      os << fmt(rep.raw.moments[k]) << ',' << fmt(rep.raw.ses[k]);
    else
      os << "0,0";
    os << '\n';
  }
  r.csv = os.str();
  r.plot = plot_lines(c.epsilons, c.moments);
  r.pass = rep.pass;
}

void exp_weak(ExperimentResult& r, Context& ctx, json& rec) {
  const auto& cfg = ctx.cfg();
  const auto rep =
      ex::verify_weak_solution(ctx.coupled(), ctx.drift(), ctx.params(), cfg.delta, cfg.b(), cfg.probe_time());
  rec["delta"] = rep.delta;
  rec["b_exponent"] = rep.b_exponent;
  rec["t_probe"] = rep.t_probe;
  rec["epsilons"] = rep.epsilons;
  rec["exceed_probs"] = rep.exceed_probs;
  rec["exceed_ses"] = rep.exceed_ses;
  rec["theta_moments"] = rep.theta_moments;
  rec["theta_scaled"] = rep.theta_scaled;
  rec["tail_probes"] = rep.tail_probes;
  rec["excluded"] = rep.excluded;
  rec["excluded_fraction"] = rep.excluded_fraction;
  std::ostringstream os;
  os << csv_head(ctx, "epsilon,estimate,se,theta_moment,theta_scaled,tail_probe");
  for (std::size_t k = 0; k < rep.epsilons.size(); ++k)
    os << fmt(rep.epsilons[k]) << ',' << fmt(rep.exceed_probs[k]) << ',' << fmt(rep.exceed_ses[k]) << ','
       << fmt(rep.theta_moments[k]) << ',' << fmt(rep.theta_scaled[k]) << ',' << fmt(rep.tail_probes[k]) << '\n';
  r.csv = os.str();
  r.plot = plot_lines(rep.epsilons, rep.theta_moments);
  r.pass = rep.pass;
}

using ExperimentFn = std::function<void(ExperimentResult&, Context&, json&)>;

ExperimentFn lookup(const std::string& name) {
  if (name == "constants") return exp_constants;
  if (name == "kernel_identities") return exp_kernel;
  if (name == "cov_decomposition") return exp_cov;
  if (name == "linear_law") return exp_linear;
  if (name == "fbm_increments") return exp_fbm;
  if (name == "holder_slope") return exp_holder;
  if (name == "correction_rate") return exp_correction;
  if (name == "weak_solution") return exp_weak;
  throw ContractError("unknown experiment " + name);
}

json params_json(const ModelParams& p) {
  return json{{"H", p.H},         {"alpha", p.alpha}, {"K", p.K},   {"kappa_H", p.kappa_H},
              {"c_alpha", p.c_alpha}, {"G_H", p.G_H}, {"a_split", p.a_split}, {"Y0", p.Y0}, {"T", p.T}};
}

}  // namespace

bool RunManifest::all_pass() const {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["config"] = json::parse(config.to_json());
  j["config_hash"] = config.hash();
  j["seed"] = config.seed;
  j["n_replicas"] = config.n_replicas;
  j["params"] = params_json(params);
  j["experiments"] = json::array();
  for (const auto& r : results) {
    json e{{"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"record", json::parse(r.record)}};
    if (!r.error.empty()) e["error"] = r.error;
    j["experiments"].push_back(e);
  }
  j["all_pass"] = all_pass();
  j["wall_clock_seconds"] = wall_seconds;
  j["artifacts"] = artifacts;
  return j.dump(2);
}

RunManifest run_experiments(const RunConfig& cfg, std::ostream& log, Exec exec) {
  validate(cfg);
  const auto start = Clock::now();
  RunManifest man;
  man.config = cfg;
  man.version = ROUGHDRIVE_VERSION;
  Context ctx(cfg, exec);
  man.params = ctx.params();
  for (const auto& name : cfg.experiments) {
    ExperimentResult r;
    r.name = name;
    json rec{{"seed", cfg.seed}, {"config_hash", cfg.hash()}, {"n_replicas", cfg.n_replicas}};
    const auto t0 = Clock::now();
    try {
      lookup(name)(r, ctx, rec);
    } catch (const std::exception& e) {
      r.pass = false;
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    rec["pass"] = r.pass;
    r.record = rec.dump();
    log << (r.pass ? "PASS " : "FAIL ") << name << " (" << r.seconds << " s)";
    if (!r.error.empty()) log << ": " << r.error;
    log << '\n';
    man.results.push_back(std::move(r));
  }
  man.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return man;
}

int run(const RunConfig& cfg, std::ostream& log, Exec exec) {
  RunManifest man = run_experiments(cfg, log, exec);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& file, const std::string& text) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw NumericError("cannot write " + (dir / file).string());
    out << text;
    man.artifacts.push_back(file);
  };
  for (const auto& r : man.results) {
    if (!r.csv.empty()) write(r.name + ".csv", r.csv);
    if (!r.plot.empty()) write(r.name + ".plot.dat", r.plot);
  }
  man.artifacts.push_back("manifest.json");
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << man.to_json() << '\n';
  return man.exit_code();
}

}  // namespace roughdrive
