#include "roughdrive/params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "roughdrive/errors.hpp"

namespace roughdrive {

namespace {

void require_hurst(double H) {
  if (!(H > 0.0 && H <= 0.25)) {
    std::ostringstream os;
    os << "H = " << H
       << " outside the admissible interval (0, 1/4]; equivalently alpha = 1/(1-2H) must satisfy "
          "Dalang's condition 1 < alpha <= 2";
    throw DomainError(os.str());
  }
}

}  // namespace

double alpha_from_hurst(double H) {
  require_hurst(H);
  return 1.0 / (1.0 - 2.0 * H);
}

double hurst_from_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0))
    throw DomainError("alpha must lie in (1, 2] (Dalang's condition)");
  return (alpha - 1.0) / (2.0 * alpha);
}

double kappa_from_hurst(double H) {
  require_hurst(H);
  const double one_m = 1.0 - 2.0 * H;
  return std::sqrt(one_m * std::tgamma(one_m) / (2.0 * std::numbers::pi * H));
}

double c_alpha_from_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0))
    throw DomainError("alpha must lie in (1, 2] (Dalang's condition)");
  return std::sqrt(std::tgamma(1.0 / alpha) / (std::numbers::pi * (alpha - 1.0)));
}

ModelParams derive_params(double H, double Y0, double T) {
  require_hurst(H);
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("horizon T must be positive and finite");
  if (!std::isfinite(Y0)) throw DomainError("Y0 must be finite");

  ModelParams p;
  p.H = H;
  p.alpha = alpha_from_hurst(H);
  p.K = 2.0 * H;
  p.kappa_H = kappa_from_hurst(H);
  p.c_alpha = c_alpha_from_alpha(p.alpha);
  p.G_H = 2.0 * H / (1.0 + H);
  p.a_split = 1.0 / (1.0 + H);
  p.Y0 = Y0;
  p.T = T;
  return p;
}

double estimate_lipschitz(const RealFn& g) {
  constexpr int n = 10000;
  constexpr double lo = -10.0, hi = 10.0;
  const double h = (hi - lo) / (n - 1);
  double best = 0.0;
  double prev = g(lo);
  for (int i = 1; i < n; ++i) {
    const double cur = g(lo + i * h);
    best = std::max(best, std::fabs(cur - prev) / h);
    prev = cur;
  }
  return best;
}

DriftPair make_drift_pair(RealFn g, const ModelParams& params, std::optional<double> lip_g) {
  if (!g) throw ContractError("drift g must be callable");
  DriftPair d;
  d.f_scale = std::pow(2.0, params.H) / (params.kappa_H * params.kappa_H * std::numbers::sqrt2);
  d.lip_g = lip_g ? *lip_g : estimate_lipschitz(g);
  d.f = [g, s = d.f_scale](double x) { return s * g(x); };
  d.g = std::move(g);
  return d;
}

DriftPair drift_from_f(RealFn f, const ModelParams& params, std::optional<double> lip_f) {
  if (!f) throw ContractError("drift f must be callable");
  DriftPair d;
  d.f_scale = std::pow(2.0, params.H) / (params.kappa_H * params.kappa_H * std::numbers::sqrt2);
  d.g = [f, s = d.f_scale](double x) { return f(x) / s; };
  d.lip_g = lip_f ? *lip_f / d.f_scale : estimate_lipschitz(d.g);
  d.f = std::move(f);
  return d;
}

}  // namespace roughdrive
