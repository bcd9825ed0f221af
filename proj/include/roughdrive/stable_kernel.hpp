#pragma once

// Transition density of the symmetric alpha-stable Levy process generated by
// (1/2) * fractional Laplacian, i.e. the density p_t with Fourier transform
// exp(-t |xi|^alpha / 2).

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "roughdrive/params.hpp"

namespace roughdrive::kernel {

/// exp(-t |xi|^alpha / 2). Throws DomainError for t <= 0.
double char_fn(double alpha, double t, double xi);

/// p_1(x) by direct Fourier inversion, (1/pi) * int_0^inf cos(xi x) exp(-xi^alpha/2) dxi.
/// Panels end at the zeros of cos(xi x) and are at most 0.5 wide; each gets a
/// 30-point Gauss-Legendre rule checked against the 20-point one (tanh-sinh on
/// the first panel when alpha < 2). The integrand is truncated where
/// exp(-xi^alpha/2) < 1e-16. Throws NumericError when a panel is unresolved.
double p1_inversion(double alpha, double x);

/// p_1 tabulated on a uniform grid of [0, x_max], interpolated by a cubic
/// Hermite with fourth-order slopes passed through the Fritsch-Carlson
/// monotonicity limiter, with a fitted power-law tail beyond x_max:
/// p_1(x) ~ C1 x^-(1+alpha) + C2 x^-(1+2 alpha).
struct KernelTable {
  double alpha = 2;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> slopes;
  double x_max = 50;
  double tail_constant = 0;    ///< C1, leading tail coefficient
  double tail_constant_2 = 0;  ///< C2, first correction

  /// p_1 at |x|.
  double p1(double x) const;
  /// 2 * int_{x_max}^inf of the tail model.
  double tail_mass() const;
  /// 2 * (exact integral of the interpolant on [0, x_max]) + tail_mass().
  double total_mass() const;
  /// int_R p_1(y)^2 dy from the interpolant (tail included).
  double l2_norm_sq() const;
};

/// resolution = number of grid points on [0, x_max]. alpha must be in (1, 2].
KernelTable build_table(double alpha, std::size_t resolution = 5001, double x_max = 50.0);

/// p_t(x) = t^{-1/alpha} p_1(|x| t^{-1/alpha}).
double density(const KernelTable& table, double t, double x);

/// ||p_t||^2_{L^2} = Gamma(1/alpha) / (alpha pi t^{1/alpha}).
double l2_norm_sq(double alpha, double t);
inline double l2_norm_sq(const ModelParams& p, double t) { return l2_norm_sq(p.alpha, t); }

/// p_t(0) = sup_x p_t(x) = 2^{1/alpha} Gamma(1/alpha) / (alpha pi t^{1/alpha}).
double peak(double alpha, double t);
inline double peak(const ModelParams& p, double t) { return peak(p.alpha, t); }

/// CSV dump: version comment, "# alpha=<alpha>", then "x,p1_of_x" rows.
void write_table_csv(std::ostream& os, const KernelTable& table);

}  // namespace roughdrive::kernel
