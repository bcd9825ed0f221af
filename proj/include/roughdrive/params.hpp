#pragma once

#include <functional>
#include <optional>

namespace roughdrive {

/// Every scalar constant of the model, derived from the Hurst exponent.
///
/// The stability index of the driving fractional Laplacian is tied to H by
/// alpha = 1 / (1 - 2H), which maps the admissible range H in (0, 1/4] onto
/// 1 < alpha <= 2 (the range where the linear equation has function-valued
/// solutions). Immutable once built.
struct ModelParams {
  double H = 0;        ///< Hurst exponent of the driving fBm
  double alpha = 0;    ///< stability index of the fractional Laplacian
  double K = 0;        ///< second bi-fBm parameter, (alpha - 1) / alpha == 2H
  double kappa_H = 0;  ///< amplitude linking Y to u(0); equals c_alpha
  double c_alpha = 0;  ///< amplitude of the linear trace covariance
  double G_H = 0;      ///< correction-rate exponent 2H / (1 + H)
  double a_split = 0;  ///< localization exponent 1 / (1 + H)
  double Y0 = 0;       ///< initial value of the field u
  double T = 0;        ///< time horizon
};

/// Builds ModelParams; throws DomainError unless 0 < H <= 1/4 and T > 0.
ModelParams derive_params(double H, double Y0 = 0.0, double T = 1.0);

double alpha_from_hurst(double H);
double hurst_from_alpha(double alpha);
double kappa_from_hurst(double H);
double c_alpha_from_alpha(double alpha);

using RealFn = std::function<double(double)>;

/// The drift g of dY = g(Y) dX and its rescaling f used by the heat equation,
/// f = 2^H / (kappa_H^2 sqrt 2) * g.
struct DriftPair {
  RealFn g;
  RealFn f;
  double lip_g = 0;     ///< supplied, or a probed lower bound
  double f_scale = 0;   ///< f / g
};

/// Lower bound on Lip(g): largest divided difference over 10^4 equispaced
/// points of [-10, 10].
double estimate_lipschitz(const RealFn& g);

DriftPair make_drift_pair(RealFn g, const ModelParams& params,
                          std::optional<double> lip_g = std::nullopt);

/// The same pair built from f, which is kept exactly (f == 1 stays 1.0).
DriftPair drift_from_f(RealFn f, const ModelParams& params,
                       std::optional<double> lip_f = std::nullopt);

}  // namespace roughdrive
