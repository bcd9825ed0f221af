#include "roughdrive/fields.hpp"

#include <cmath>

#include "roughdrive/errors.hpp"

namespace roughdrive::fields {

namespace {

void require_times(double s, double t) {
  if (!(s >= 0.0 && t >= 0.0)) throw DomainError("covariance arguments must be non-negative times");
}

}  // namespace

double cov_fbm(double s, double t, double H) {
  require_times(s, t);
  if (!(H > 0.0 && H < 1.0)) throw DomainError("fBm Hurst parameter must lie in (0, 1)");
  const double h2 = 2.0 * H;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::fabs(t - s), h2));
}

double cov_bifbm(double s, double t, double H, double K) {
  require_times(s, t);
  if (!(H > 0.0 && H < 1.0)) throw DomainError("bi-fBm parameter H must lie in (0, 1)");
  if (!(K > 0.0 && K <= 1.0)) throw DomainError("bi-fBm parameter K must lie in (0, 1]");
  const double h2 = 2.0 * H;
  return std::pow(2.0, -K) *
         (std::pow(std::pow(t, h2) + std::pow(s, h2), K) - std::pow(std::fabs(t - s), h2 * K));
}

double cov_xi(double s, double t, double K) {
  require_times(s, t);
  if (!(K > 0.0 && K < 1.0)) throw DomainError("xi parameter K must lie in (0, 1)");
  return std::pow(2.0, -K) * (std::pow(t, K) + std::pow(s, K) - std::pow(t + s, K));
}

double cov_xi_quadrature(double s, double t, double K) {
  require_times(s, t);
  if (!(K > 0.0 && K < 1.0)) throw DomainError("xi parameter K must lie in (0, 1)");
  if (s == 0.0 || t == 0.0) return 0.0;
  // (1-e^{-rt})(1-e^{-rs}) r^{-1-K} written to stay finite as r -> 0
  auto integrand = [s, t, K](double r) {
    if (r == 0.0) return 0.0;
    const double a = -std::expm1(-r * t) / r;
    const double b = -std::expm1(-r * s) / r;
    return a * b * std::pow(r, 1.0 - K);
  };
  const double scale = K / (std::pow(2.0, K) * std::tgamma(1.0 - K));
  return scale * quadrature_0_inf(integrand, 0.0);
}

double cov_v_trace(double s, double t, const ModelParams& p) {
  require_times(s, t);
  const double e = (p.alpha - 1.0) / p.alpha;
  return p.c_alpha * p.c_alpha * std::pow(2.0, (1.0 - p.alpha) / p.alpha) *
         (std::pow(t + s, e) - std::pow(std::fabs(t - s), e));
}

double cov_r_smooth(double s, double t, const ModelParams& p) {
  return p.c_alpha * p.c_alpha * cov_xi(s, t, 2.0 * p.H);
}

double decomposition_residual(double s, double t, const ModelParams& p) {
  const double c2 = p.c_alpha * p.c_alpha;
  const double fbm_part = c2 * std::pow(2.0, 1.0 - p.K) * cov_fbm(s, t, p.H);
  return cov_v_trace(s, t, p) - (fbm_part - cov_r_smooth(s, t, p));
}

CovFn make_cov(const CovSpec& spec) {
  switch (spec.kind) {
    case CovKind::fbm:
      if (!(spec.H > 0.0 && spec.H < 1.0)) throw DomainError("fBm needs H in (0, 1)");
      return [H = spec.H](double s, double t) { return cov_fbm(s, t, H); };
    case CovKind::bifbm:
      if (!(spec.H > 0.0 && spec.H < 1.0) || !(spec.K > 0.0 && spec.K <= 1.0))
        throw DomainError("bi-fBm needs H in (0, 1) and K in (0, 1]");
      return [H = spec.H, K = spec.K](double s, double t) { return cov_bifbm(s, t, H, K); };
    case CovKind::xi:
      if (!(spec.K > 0.0 && spec.K < 1.0)) throw DomainError("xi needs K in (0, 1)");
      return [K = spec.K](double s, double t) { return cov_xi(s, t, K); };
    case CovKind::v_trace:
      if (!(spec.params.alpha > 1.0 && spec.params.alpha <= 2.0)) throw DomainError("v trace needs derived params");
      return [p = spec.params](double s, double t) { return cov_v_trace(s, t, p); };
    case CovKind::r_smooth:
      if (!(spec.params.alpha > 1.0 && spec.params.alpha <= 2.0)) throw DomainError("R needs derived params");
      return [p = spec.params](double s, double t) { return cov_r_smooth(s, t, p); };
  }
  throw ContractError("unknown covariance kind");
}

PathSample sample_xi(const TimeGrid& grid, const ModelParams& p, std::uint64_t seed,
                     std::size_t n_replicas, Exec exec) {
  const double K = 2.0 * p.H;
  const auto cov = build_cov([K](double s, double t) { return cov_xi(s, t, K); }, grid);
  return cholesky_sample(cov, grid, seed, n_replicas, "xi", "xi", exec);
}

PathSample extract_fbm(const PathSample& v_trace, const PathSample& xi, const ModelParams& p) {
  if (!(v_trace.grid == xi.grid)) throw ContractError("v trace and xi must share the same time grid");
  if (v_trace.n_replicas != xi.n_replicas)
    throw ContractError("v trace and xi must have the same replica count");
  PathSample x(v_trace.grid, v_trace.n_replicas, v_trace.seed, "X");
  const double scale = std::pow(2.0, -(1.0 - p.K) / 2.0);
  const double inv_c = 1.0 / p.c_alpha;
  for (std::size_t i = 0; i < x.values.size(); ++i)
    x.values[i] = scale * (inv_c * v_trace.values[i] - xi.values[i]);
  return x;
}

}  // namespace roughdrive::fields
