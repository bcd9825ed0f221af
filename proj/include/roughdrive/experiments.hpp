#pragma once

// Statistical checks of the model's identities and rates on simulated data.
// Estimators are reductions over replicas; each has an OpenMP path and a
// serial reference that agree up to floating-point re-association.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roughdrive/exec.hpp"
#include "roughdrive/gaussian_sampler.hpp"
#include "roughdrive/params.hpp"
#include "roughdrive/spde_sim.hpp"

namespace roughdrive::experiments {

/// Sample mean of x^2 and its standard error (from the fourth moment).
struct MomentEstimate {
  double mean = 0;
  double se = 0;
  std::size_t n = 0;
};

MomentEstimate second_moment(std::span<const double> x, Exec exec = Exec::parallel);
MomentEstimate second_moment_serial(std::span<const double> x);

/// Weighted least-squares fit of log(moment) against log(epsilon).
struct RateFit {
  std::vector<double> epsilons;  ///< decreasing
  std::vector<double> moments;
  std::vector<double> ses;
  double slope = 0;
  double slope_se = 0;
  double intercept = 0;
  bool pass = false;
};

/// Needs >= 4 lags spanning >= 1.5 decades and positive moments; otherwise
/// ContractError. Weights are (moment / se)^2, i.e. inverse delta-method
/// variances of log(moment).
RateFit fit_loglog(const std::vector<double>& epsilons, const std::vector<MomentEstimate>& moments);

/// count dyadic lags dt * smallest_multiple * 2^k, returned in decreasing order.
std::vector<double> dyadic_lags(double dt, std::size_t smallest_multiple, std::size_t count);

// ---------------------------------------------------------------------------

struct CovDecompositionReport {
  double max_residual = 0;        ///< |2^{K-1}(bifbm(1/2,K) + xi(K)) - fbm(K/2)|
  double max_v_residual = 0;      ///< |cov_v - (c^2 2^{1-K} cov_fbm - cov_r)|
  double max_xi_quad_gap = 0;     ///< |cov_xi closed form - quadrature|
  bool pass = false;              ///< max_residual < 1e-6
};

CovDecompositionReport verify_cov_decomposition(double H, const TimeGrid& grid, bool with_quadrature = true);

/// Increments X_{t+eps} - X_t with t = t_base and t + eps every later grid
/// point. Passes iff |slope - 2H| <= 0.1 and every moment / eps^{2H} lies in
/// [0.9, 1.1]. Needs >= 1000 replicas.
RateFit estimate_fbm_increments(const PathSample& X, double H, double t_base, Exec exec = Exec::parallel);

/// Same lags on u_t(0). Passes iff slope lies in [2H - 0.1, 2H + 0.15].
/// Throws DegenerateInputError when every increment is exactly zero.
RateFit estimate_holder_slope(const PathSample& u_trace, const ModelParams& params, double t_probe,
                              Exec exec = Exec::parallel);

/// E|v_{t+eps}(0) - v_t(0)|^2 from cov_v_trace.
double linear_increment_moment(const ModelParams& params, double t, double eps);

/// Largest |moment - analytic linear-law moment| / se over the fit's lags.
double max_linear_law_deviation(const RateFit& fit, const ModelParams& params, double t_probe);

struct CorrectionRateReport {
  RateFit correction;      ///< E|D_eps|^2, D = du - f(c u_t) dv
  RateFit raw;             ///< E|du|^2 on the same lags
  double reference_slope;  ///< 2 G_H
  double max_abs_correction = 0;
  bool degenerate_zero = false;  ///< D vanished to rounding on every replica and lag
  bool pass = false;
};

/// Passes iff the correction slope is >= 2H + 0.15. A correction that vanishes
/// to rounding (|D| <= 1e-12 * max(1, |du|)) is reported as degenerate and passes.
CorrectionRateReport estimate_correction_rate(const spde::CoupledTrace& traces, const DriftPair& drift,
                                              double t_probe, Exec exec = Exec::parallel);

struct WeakSolutionReport {
  double delta = 0;
  double b_exponent = 0;
  double t_probe = 0;
  std::vector<double> epsilons;      ///< decreasing
  std::vector<double> exceed_probs;
  std::vector<double> exceed_ses;    ///< binomial standard errors
  std::vector<double> theta_moments; ///< E Theta^2
  std::vector<double> theta_scaled;  ///< E Theta^2 / eps^{2b}
  std::vector<double> tail_probes;   ///< P{|Z| <= eps^{b-H} / delta}
  std::size_t excluded = 0;          ///< replica-lag pairs with dX == 0
  double excluded_fraction = 0;
  bool pass = false;
};

/// Y = kappa_H u(0) and X extracted from (v, xi). Passes iff the exceedance
/// sequence is non-increasing within 2 binomial SEs and its last value is below
/// half the first (or the sequence is identically zero).
WeakSolutionReport verify_weak_solution(const spde::CoupledTrace& traces, const DriftPair& drift,
                                        const ModelParams& params, double delta, double b_exponent,
                                        double t_probe);

/// 2 Phi(eps^{b-H} / delta) - 1.
double gaussian_tail_probe(double eps, double b_exponent, double H, double delta);

struct LinearLawReport {
  std::vector<double> times;
  std::vector<double> empirical;
  std::vector<double> ses;
  std::vector<double> analytic;
  double max_rel_error = 0;
  bool pass = false;  ///< each |emp - analytic| <= max(3 se, 5% analytic)
  /// Largest |emp - analytic| / (3 se + 5% |analytic|) over the covariance matrix.
  double max_matrix_score = 0;
  bool matrix_pass = false;
};

/// Var v_t(0) at every record time with t > 0 against cov_v_trace(t, t).
LinearLawReport verify_linear_law(const PathSample& v_trace, const ModelParams& params,
                                  Exec exec = Exec::parallel);

struct KernelSuiteReport {
  double alpha = 0;
  double mass = 0;                  ///< should be 1 within 1e-6
  double l2_rel_error = 0;          ///< closed form vs table quadrature
  double peak_rel_error = 0;        ///< peak(t) vs density(t, 0), worst over t
  double chapman_kolmogorov_error = 0;
  double gaussian_max_error = 0;    ///< alpha = 2 only, else 0
  bool pass = false;
};

KernelSuiteReport verify_kernel(double alpha, std::size_t resolution = 5001);

struct ConstantsReport {
  std::size_t samples = 0;
  double max_kappa_gap = 0;
  double max_roundtrip_gap = 0;
  double max_split_gap = 0;  ///< max of |G - (1 - a(1-H))| and |G - 2aH|
  double min_ratio = 0;      ///< min G_H / H
  double max_ratio = 0;
  bool pass = false;
};

/// derive_params over n random H in (0.01, 0.25] plus H = 1/4.
ConstantsReport verify_constants(std::size_t n, std::uint64_t seed);

}  // namespace roughdrive::experiments
