#include "roughdrive/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "roughdrive/errors.hpp"
#include "roughdrive/fields.hpp"
#include "roughdrive/rng.hpp"
#include "roughdrive/stable_kernel.hpp"

namespace roughdrive::experiments {

namespace {

// The parallel reduction sums fixed chunks and then combines the partials in
// chunk order, so its result does not depend on the thread count.
constexpr std::size_t kChunks = 64;

struct Sums {
  double s1 = 0;
  double s2 = 0;
};

template <class Term>
Sums chunked_sums(std::size_t n, const Term& term, Exec exec) {
  std::array<Sums, kChunks> part{};
  const auto chunks = static_cast<std::ptrdiff_t>(kChunks);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t lo = n * static_cast<std::size_t>(c) / kChunks;
    const std::size_t hi = n * static_cast<std::size_t>(c + 1) / kChunks;
    Sums s;
    for (std::size_t i = lo; i < hi; ++i) {
      const double y = term(i);
      s.s1 += y;
      s.s2 += y * y;
    }
    part[static_cast<std::size_t>(c)] = s;
  }
  Sums total;
  for (const auto& s : part) {
    total.s1 += s.s1;
    total.s2 += s.s2;
  }
  return total;
}

template <class Term>
Sums serial_sums(std::size_t n, const Term& term) {
  Sums s;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = term(i);
    s.s1 += y;
    s.s2 += y * y;
  }
  return s;
}

MomentEstimate finish(const Sums& s, std::size_t n) {
  MomentEstimate m;
  m.n = n;
  if (n == 0) return m;
  const double nn = static_cast<double>(n);
  m.mean = s.s1 / nn;
  if (n > 1) {
    const double var = std::max(0.0, (s.s2 / nn - m.mean * m.mean) * nn / (nn - 1.0));
    m.se = std::sqrt(var / nn);
  }
  return m;
}

// Sample mean of term(i) over n replicas with its standard error.
template <class Term>
MomentEstimate mean_estimate(std::size_t n, const Term& term, Exec exec) {
  if (exec == Exec::serial) return finish(serial_sums(n, term), n);
  return finish(chunked_sums(n, term, exec), n);
}

// Lags t - t_base for every grid point after t_base, decreasing.
std::vector<std::pair<double, std::size_t>> lags_after(const TimeGrid& grid, double t_base) {
  const std::size_t i0 = grid.index_of(t_base);
  std::vector<std::pair<double, std::size_t>> out;
  for (std::size_t j = grid.size(); j-- > i0 + 1;) out.emplace_back(grid[j] - grid[i0], j);
  if (out.size() < 4) {
    std::ostringstream os;
    os << "insufficient lags: " << out.size() << " record times after t=" << t_base << ", need at least 4";
    throw ContractError(os.str());
  }
  return out;
}

std::vector<double> firsts(const std::vector<std::pair<double, std::size_t>>& lags) {
  std::vector<double> e;
  e.reserve(lags.size());
  for (const auto& [eps, j] : lags) e.push_back(eps);
  return e;
}

}  // namespace

MomentEstimate second_moment(std::span<const double> x, Exec exec) {
  return mean_estimate(x.size(), [&](std::size_t i) { return x[i] * x[i]; }, exec);
}

MomentEstimate second_moment_serial(std::span<const double> x) {
  return second_moment(x, Exec::serial);
}

RateFit fit_loglog(const std::vector<double>& epsilons, const std::vector<MomentEstimate>& moments) {
  if (epsilons.size() != moments.size()) throw ContractError("lag and moment counts differ");
  if (epsilons.size() < 4) throw ContractError("rate fit needs at least 4 lags");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0)) throw ContractError("lags must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ContractError("lags must be strictly decreasing");
  }
  const double decades = std::log10(epsilons.front() / epsilons.back());
  if (decades < 1.5) {
    std::ostringstream os;
    os << "lags span " << decades << " decades, need at least 1.5";
    throw ContractError(os.str());
  }
  RateFit fit;
  fit.epsilons = epsilons;
  std::vector<double> x, y, w;
  for (const auto& m : moments) {
    if (!(m.mean > 0)) throw ContractError("moment estimates must be positive");
    if (!(m.se > 0)) throw ContractError("moment standard errors must be positive");
    fit.moments.push_back(m.mean);
    fit.ses.push_back(m.se);
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double xi = std::log(epsilons[i]);
    const double yi = std::log(fit.moments[i]);
    const double wi = std::pow(fit.moments[i] / fit.ses[i], 2);
    x.push_back(xi);
    y.push_back(yi);
    w.push_back(wi);
    sw += wi;
    sx += wi * xi;
    sy += wi * yi;
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  fit.slope_se = std::sqrt(1.0 / sxx);
  return fit;
}

std::vector<double> dyadic_lags(double dt, std::size_t smallest_multiple, std::size_t count) {
  if (!(dt > 0) || smallest_multiple < 1) throw ContractError("dyadic lags need dt > 0 and multiple >= 1");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[count - 1 - k] = dt * static_cast<double>(smallest_multiple) * std::ldexp(1.0, static_cast<int>(k));
  return out;
}

// ---------------------------------------------------------------------------

CovDecompositionReport verify_cov_decomposition(double H, const TimeGrid& grid, bool with_quadrature) {
  const ModelParams p = derive_params(H);
  const double K = p.K;
  const double scale = std::pow(2.0, K - 1.0);
  CovDecompositionReport r;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double s = grid[i], t = grid[j];
      const double lhs = scale * (fields::cov_bifbm(s, t, 0.5, K) + fields::cov_xi(s, t, K));
      r.max_residual = std::max(r.max_residual, std::fabs(lhs - fields::cov_fbm(s, t, H)));
      r.max_v_residual = std::max(r.max_v_residual, std::fabs(fields::decomposition_residual(s, t, p)));
      if (with_quadrature && j >= i && s > 0 && t > 0) {
        const double gap = fields::cov_xi(s, t, K) - fields::cov_xi_quadrature(s, t, K);
        r.max_xi_quad_gap = std::max(r.max_xi_quad_gap, std::fabs(gap));
      }
    }
  }
  r.pass = r.max_residual < 1e-6;
  return r;
}

RateFit estimate_fbm_increments(const PathSample& X, double H, double t_base, Exec exec) {
  if (X.n_replicas < 1000) throw ContractError("fBm increment estimate needs at least 1000 replicas");
  const auto lags = lags_after(X.grid, t_base);
  const std::size_t i0 = X.grid.index_of(t_base);
  std::vector<MomentEstimate> m;
  for (const auto& [eps, j] : lags) {
    m.push_back(mean_estimate(
        X.n_replicas,
        [&, j = j](std::size_t r) {
          const double d = X.at(r, j) - X.at(r, i0);
          return d * d;
        },
        exec));
  }
  RateFit fit = fit_loglog(firsts(lags), m);
  fit.pass = std::fabs(fit.slope - 2.0 * H) <= 0.1;
  for (std::size_t k = 0; k < fit.epsilons.size(); ++k) {
    const double ratio = fit.moments[k] / std::pow(fit.epsilons[k], 2.0 * H);
    if (ratio < 0.9 || ratio > 1.1) fit.pass = false;
  }
  return fit;
}

RateFit estimate_holder_slope(const PathSample& u_trace, const ModelParams& params, double t_probe, Exec exec) {
  const auto lags = lags_after(u_trace.grid, t_probe);
  const std::size_t i0 = u_trace.grid.index_of(t_probe);
  std::vector<MomentEstimate> m;
  bool any_nonzero = false;
  for (const auto& [eps, j] : lags) {
    m.push_back(mean_estimate(
        u_trace.n_replicas,
        [&, j = j](std::size_t r) {
          const double d = u_trace.at(r, j) - u_trace.at(r, i0);
          return d * d;
        },
        exec));
    any_nonzero = any_nonzero || m.back().mean > 0;
  }
  if (!any_nonzero) throw DegenerateInputError("degenerate input: every increment of u is exactly zero");
  RateFit fit = fit_loglog(firsts(lags), m);
  fit.pass = fit.slope >= 2.0 * params.H - 0.1 && fit.slope <= 2.0 * params.H + 0.15;
  return fit;
}

double linear_increment_moment(const ModelParams& params, double t, double eps) {
  using fields::cov_v_trace;
  return cov_v_trace(t + eps, t + eps, params) + cov_v_trace(t, t, params) - 2.0 * cov_v_trace(t, t + eps, params);
}

double max_linear_law_deviation(const RateFit& fit, const ModelParams& params, double t_probe) {
  double worst = 0;
  for (std::size_t k = 0; k < fit.epsilons.size(); ++k) {
    const double exact = linear_increment_moment(params, t_probe, fit.epsilons[k]);
    worst = std::max(worst, std::fabs(fit.moments[k] - exact) / fit.ses[k]);
  }
  return worst;
}

CorrectionRateReport estimate_correction_rate(const spde::CoupledTrace& traces, const DriftPair& drift,
                                              double t_probe, Exec exec) {
  if (!traces.coupled) throw ContractError("correction rate needs coupled traces (u and v on the same noise)");
  const ModelParams& p = traces.params;
  const auto lags = lags_after(traces.u0.grid, t_probe);
  if (!(traces.v0.grid == traces.u0.grid)) throw ContractError("u and v traces are on different grids");
  if (t_probe < p.T / 2 - 1e-12 || t_probe + lags.front().first > p.T + 1e-12)
    throw ContractError("t_probe must lie in [T/2, T - max lag]");

  const std::size_t i0 = traces.u0.grid.index_of(t_probe);
  const std::size_t n = traces.u0.n_replicas;
  const double c = p.c_alpha;
  std::vector<double> f_at(n);
  for (std::size_t r = 0; r < n; ++r) f_at[r] = drift.f(c * traces.u0.at(r, i0));

  CorrectionRateReport rep;
  rep.reference_slope = 2.0 * p.G_H;
  std::vector<MomentEstimate> md, mu;
  bool all_zero = true;
  for (const auto& [eps, j] : lags) {
    for (std::size_t r = 0; r < n; ++r) {
      const double du = traces.u0.at(r, j) - traces.u0.at(r, i0);
      const double dv = traces.v0.at(r, j) - traces.v0.at(r, i0);
      const double d = du - f_at[r] * dv;
      rep.max_abs_correction = std::max(rep.max_abs_correction, std::fabs(d));
      if (std::fabs(d) > 1e-12 * std::max(1.0, std::fabs(du))) all_zero = false;
    }
    md.push_back(mean_estimate(
        n,
        [&, j = j](std::size_t r) {
          const double du = traces.u0.at(r, j) - traces.u0.at(r, i0);
          const double dv = traces.v0.at(r, j) - traces.v0.at(r, i0);
          const double d = du - f_at[r] * dv;
          return d * d;
        },
        exec));
    mu.push_back(mean_estimate(
        n,
        [&, j = j](std::size_t r) {
          const double du = traces.u0.at(r, j) - traces.u0.at(r, i0);
          return du * du;
        },
        exec));
  }
  const auto eps = firsts(lags);
  if (all_zero) {
    rep.degenerate_zero = true;
    rep.correction.epsilons = eps;
    for (const auto& m : md) {
      rep.correction.moments.push_back(m.mean);
      rep.correction.ses.push_back(m.se);
    }
    rep.correction.pass = true;
    bool raw_signal = std::any_of(mu.begin(), mu.end(), [](const MomentEstimate& m) { return m.mean > 0; });
    if (raw_signal) rep.raw = fit_loglog(eps, mu);
    rep.pass = true;
    return rep;
  }
  rep.correction = fit_loglog(eps, md);
  rep.raw = fit_loglog(eps, mu);
  rep.correction.pass = rep.correction.slope >= 2.0 * p.H + 0.15;
  rep.raw.pass = true;
  rep.pass = rep.correction.pass && rep.correction.slope >= rep.raw.slope + 0.15;
  return rep;
}

double gaussian_tail_probe(double eps, double b_exponent, double H, double delta) {
  if (!(delta > 0)) throw ContractError("delta must be positive");
  if (!(eps >= 0)) throw ContractError("eps must be non-negative");
  const double arg = std::pow(eps, b_exponent - H) / delta;
  return std::erf(arg / std::numbers::sqrt2);
}

WeakSolutionReport verify_weak_solution(const spde::CoupledTrace& traces, const DriftPair& drift,
                                        const ModelParams& params, double delta, double b_exponent,
                                        double t_probe) {
  if (!(delta > 0)) throw ContractError("delta must be positive");
  if (!(b_exponent > params.H && b_exponent < params.G_H))
    throw ContractError("b_exponent must lie strictly between H and G_H");
  if (!traces.coupled) throw ContractError("weak-solution check needs coupled traces");

  const PathSample X = fields::extract_fbm(traces.v0, traces.xi, params);
  const auto lags = lags_after(traces.u0.grid, t_probe);
  const std::size_t i0 = traces.u0.grid.index_of(t_probe);
  const std::size_t n = traces.u0.n_replicas;
  const double kappa = params.kappa_H;

  WeakSolutionReport rep;
  rep.delta = delta;
  rep.b_exponent = b_exponent;
  rep.t_probe = t_probe;
  std::size_t total_pairs = 0;
  for (const auto& [eps, j] : lags) {
    std::size_t exceed = 0, used = 0;
    double theta2 = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double y_t = kappa * traces.u0.at(r, i0);
      const double dy = kappa * traces.u0.at(r, j) - y_t;
      const double dx = X.at(r, j) - X.at(r, i0);
      const double gy = drift.g(y_t);
      const double theta = dy - gy * dx;
      theta2 += theta * theta;
      ++total_pairs;
      if (dx == 0.0) {
        ++rep.excluded;
        continue;
      }
      ++used;
      if (std::fabs(dy / dx - gy) > delta) ++exceed;
    }
    const double prob = used ? static_cast<double>(exceed) / static_cast<double>(used) : 0.0;
    rep.epsilons.push_back(eps);
    rep.exceed_probs.push_back(prob);
    rep.exceed_ses.push_back(used ? std::sqrt(prob * (1 - prob) / static_cast<double>(used)) : 0.0);
    rep.theta_moments.push_back(theta2 / static_cast<double>(n));
    rep.theta_scaled.push_back(rep.theta_moments.back() / std::pow(eps, 2.0 * b_exponent));
    rep.tail_probes.push_back(gaussian_tail_probe(eps, b_exponent, params.H, delta));
  }
  rep.excluded_fraction = static_cast<double>(rep.excluded) / static_cast<double>(total_pairs);

  const auto& p = rep.exceed_probs;
  const auto& se = rep.exceed_ses;
  const bool all_zero = std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; });
  bool monotone = true;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[k - 1] + 2.0 * std::hypot(se[k], se[k - 1])) monotone = false;
  rep.pass = all_zero || (monotone && p.back() < 0.5 * p.front());
  return rep;
}

LinearLawReport verify_linear_law(const PathSample& v_trace, const ModelParams& params, Exec exec) {
  LinearLawReport rep;
  const std::size_t n = v_trace.n_replicas;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < v_trace.grid.size(); ++j)
    if (v_trace.grid[j] > 0) idx.push_back(j);
  rep.pass = !idx.empty();
  rep.matrix_pass = rep.pass;
  for (std::size_t a : idx) {
    const double t = v_trace.grid[a];
    const MomentEstimate m = mean_estimate(
        n, [&](std::size_t r) { return v_trace.at(r, a) * v_trace.at(r, a); }, exec);
    const double exact = fields::cov_v_trace(t, t, params);
    rep.times.push_back(t);
    rep.empirical.push_back(m.mean);
    rep.ses.push_back(m.se);
    rep.analytic.push_back(exact);
    const double err = std::fabs(m.mean - exact);
    rep.max_rel_error = std::max(rep.max_rel_error, err / exact);
    if (err > std::max(3.0 * m.se, 0.05 * exact)) rep.pass = false;
  }
  for (std::size_t a : idx) {
    for (std::size_t b : idx) {
      if (b < a) continue;
      const MomentEstimate m = mean_estimate(
          n, [&](std::size_t r) { return v_trace.at(r, a) * v_trace.at(r, b); }, exec);
      const double exact = fields::cov_v_trace(v_trace.grid[a], v_trace.grid[b], params);
      const double err = std::fabs(m.mean - exact);
      rep.max_matrix_score = std::max(rep.max_matrix_score, err / (3.0 * m.se + 0.05 * std::fabs(exact)));
    }
  }
  rep.matrix_pass = rep.matrix_pass && rep.max_matrix_score <= 1.0;
  return rep;
}

KernelSuiteReport verify_kernel(double alpha, std::size_t resolution) {
  KernelSuiteReport rep;
  rep.alpha = alpha;
  const kernel::KernelTable table = kernel::build_table(alpha, resolution);
  rep.mass = table.total_mass();

  const double l2 = kernel::l2_norm_sq(alpha, 1.0);
  rep.l2_rel_error = std::fabs(table.l2_norm_sq() - l2) / l2;

  for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double pk = kernel::peak(alpha, t);
    rep.peak_rel_error = std::max(rep.peak_rel_error, std::fabs(pk - kernel::density(table, t, 0.0)) / pk);
  }

  // p_{1/2} * p_{1/2} = p_1, composite 4-point Gauss-Legendre in y
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};
  for (double x : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double span = 60.0, h = 0.01;
    const auto cells = static_cast<std::size_t>(2.0 * span / h);
    double conv = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double mid = -span + (static_cast<double>(c) + 0.5) * h;
      for (int q = 0; q < 4; ++q) {
        const double y = mid + 0.5 * h * gx[q];
        conv += 0.5 * h * gw[q] * kernel::density(table, 0.5, x - y) * kernel::density(table, 0.5, y);
      }
    }
    rep.chapman_kolmogorov_error =
        std::max(rep.chapman_kolmogorov_error, std::fabs(conv - kernel::density(table, 1.0, x)));
  }

  if (alpha == 2.0) {
    for (double x = 0.0; x <= 12.0; x += 0.0025) {
      const double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      rep.gaussian_max_error = std::max(rep.gaussian_max_error, std::fabs(table.p1(x) - exact));
    }
  }

  rep.pass = std::fabs(rep.mass - 1.0) <= 1e-6 && rep.l2_rel_error <= 1e-4 && rep.peak_rel_error <= 1e-5 &&
             rep.chapman_kolmogorov_error < 1e-4 && rep.gaussian_max_error <= 1e-8;
  return rep;
}

ConstantsReport verify_constants(std::size_t n, std::uint64_t seed) {
  ConstantsReport rep;
  rep.min_ratio = 2.0;
  rep.max_ratio = 0.0;
  rng::Stream rng(seed, "sample", 0);
  for (std::size_t i = 0; i <= n; ++i) {
    const double H = i == n ? 0.25 : 0.25 * rng.uniform();
    const ModelParams p = derive_params(H);
    rep.max_kappa_gap = std::max(rep.max_kappa_gap, std::fabs(p.kappa_H - p.c_alpha) / p.c_alpha);
    rep.max_roundtrip_gap = std::max(rep.max_roundtrip_gap, std::fabs(hurst_from_alpha(alpha_from_hurst(H)) - H));
    rep.max_split_gap = std::max({rep.max_split_gap, std::fabs(p.G_H - (1.0 - p.a_split * (1.0 - H))),
                                  std::fabs(p.G_H - 2.0 * p.a_split * H)});
    const double ratio = p.G_H / H;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++rep.samples;
  }
  constexpr double tol = 1e-12;
  rep.pass = rep.max_kappa_gap <= tol && rep.max_roundtrip_gap <= tol && rep.max_split_gap <= tol &&
             rep.min_ratio >= 1.6 - tol && rep.max_ratio < 2.0;
  return rep;
}

}  // namespace roughdrive::experiments
