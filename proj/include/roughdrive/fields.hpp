#pragma once

// Covariance functions of the Gaussian processes in the construction, and the
// decomposition that recovers the driving fBm from the linear heat-equation
// trace at a fixed site.
//
// The trace t -> v_t(0) of the linear equation is c_alpha times a bi-fBm(1/2, K)
// with K = (alpha-1)/alpha = 2H. A bi-fBm(1/2, K) B splits as
//   B = 2^{(1-K)/2} X + xi,
// with X an fBm(K/2) = fBm(H) and xi smooth and independent of B. Hence
//   X = 2^{-(1-K)/2} (v / c_alpha - xi),
// where xi is sampled independently of v from its own covariance.

#include <cstdint>

#include "roughdrive/gaussian_sampler.hpp"
#include "roughdrive/params.hpp"

namespace roughdrive::fields {

/// (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double cov_fbm(double s, double t, double H);

/// 2^{-K} ([t^{2H} + s^{2H}]^K - |t-s|^{2HK}); H in (0,1), K in (0,1].
double cov_bifbm(double s, double t, double H, double K);

/// Covariance of the smooth Lei-Nualart component at bi-fBm temporal
/// parameter 1/2: 2^{-K} (t^K + s^K - (t+s)^K), K in (0, 1).
double cov_xi(double s, double t, double K);

/// Same covariance through its Wiener-isometry integral
/// K / (2^K Gamma(1-K)) int_0^inf (1-e^{-rt})(1-e^{-rs}) r^{-(1+K)} dr.
double cov_xi_quadrature(double s, double t, double K);

/// Cov(v_s(0), v_t(0)) = c_alpha^2 2^{(1-alpha)/alpha} ((t+s)^{(alpha-1)/alpha} - |t-s|^{(alpha-1)/alpha}).
double cov_v_trace(double s, double t, const ModelParams& p);

/// Covariance of R = c_alpha xi at K = 2H: c_alpha^2 cov_xi(s, t; 2H).
double cov_r_smooth(double s, double t, const ModelParams& p);

/// cov_v_trace - (c_alpha^2 2^{1-K} cov_fbm(H) - cov_r_smooth). Zero up to
/// rounding: R is independent of v, so it enters Cov(v) with a minus sign.
double decomposition_residual(double s, double t, const ModelParams& p);

enum class CovKind { fbm, bifbm, xi, v_trace, r_smooth };

struct CovSpec {
  CovKind kind = CovKind::fbm;
  double H = 0.25;
  double K = 0.5;
  ModelParams params{};  ///< used by v_trace and r_smooth
};

/// Validates the parameter ranges of the kind and returns the kernel.
CovFn make_cov(const CovSpec& spec);

/// xi paths (K = 2H) on grid, drawn from the stream namespace "xi" so they are
/// independent of every field-noise stream.
PathSample sample_xi(const TimeGrid& grid, const ModelParams& p, std::uint64_t seed,
                     std::size_t n_replicas, Exec exec = Exec::parallel);

/// X = 2^{-(1-K)/2} (v / c_alpha - xi) replica by replica.
PathSample extract_fbm(const PathSample& v_trace, const PathSample& xi, const ModelParams& p);

}  // namespace roughdrive::fields
