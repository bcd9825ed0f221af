#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "roughdrive/errors.hpp"
#include "roughdrive/experiments.hpp"
#include "roughdrive/fields.hpp"

using namespace roughdrive;
using namespace roughdrive::experiments;
using doctest::Approx;

namespace {

const double kT = 0.5 + 1.0 / 16;

TimeGrid probe_grid() {
  std::vector<double> t{0.5};
  for (int k = 9; k >= 4; --k) t.push_back(0.5 + std::ldexp(1.0, -k));
  return TimeGrid(t);
}

// Exact-law v and independent xi on the probe grid.
spde::CoupledTrace exact_trace(double H, std::size_t n, std::uint64_t seed) {
  spde::CoupledTrace tr;
  tr.params = derive_params(H, 0.0, kT);
  const TimeGrid g = probe_grid();
  tr.grid_cfg = spde::GridConfig::make(8.0, 64, 1.0 / 2048, kT, g.points());
  const auto cv = build_cov([&](double s, double t) { return fields::cov_v_trace(s, t, tr.params); }, g);
  tr.v0 = cholesky_sample(cv, g, seed, n, "v0", "field");
  tr.xi = fields::sample_xi(g, tr.params, seed, n);
  tr.u0 = tr.v0;
  tr.u0.label = "u0";
  tr.seed = seed;
  tr.coupled = true;
  return tr;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("second moment") {
    std::vector<double> x{1, -2, 3, -4};
    const MomentEstimate m = second_moment_serial(x);
    CHECK(m.mean == Approx(7.5));
    CHECK(m.n == 4);
    CHECK(m.se == Approx(std::sqrt(129.0 / 3 / 4)));

    gen::Gen g(3);
    std::vector<double> big(100003);
    for (double& v : big) v = g.normal();
    const MomentEstimate a = second_moment(big, Exec::parallel);
    const MomentEstimate b = second_moment(big, Exec::serial);
    const MomentEstimate c = second_moment_serial(big);
    CHECK(std::fabs(a.mean - c.mean) < 1e-10);
    CHECK(std::fabs(a.se - c.se) < 1e-10);
    CHECK(std::fabs(a.mean - b.mean) < 1e-10);
    CHECK(std::fabs(a.mean - 1.0) < 4 * a.se);
  }

  TEST_CASE("dyadic lags") {
    const auto l = dyadic_lags(1.0 / 2048, 4, 6);
    REQUIRE(l.size() == 6);
    CHECK(l.front() == std::ldexp(1.0, -4));
    CHECK(l.back() == std::ldexp(1.0, -9));
    for (std::size_t k = 1; k < l.size(); ++k) CHECK(l[k] == 0.5 * l[k - 1]);
  }

  TEST_CASE("fit_loglog recovers an exact power law") {
    const auto eps = dyadic_lags(1.0 / 1024, 1, 8);
    std::vector<MomentEstimate> m;
    for (double e : eps) m.push_back({3.0 * std::pow(e, 0.7), 0.01 * std::pow(e, 0.7), 100});
    const RateFit f = fit_loglog(eps, m);
    CHECK(f.slope == Approx(0.7).epsilon(1e-12));
    CHECK(f.intercept == Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.slope_se > 0);
    CHECK(f.epsilons == eps);
  }

  TEST_CASE("fit_loglog contract") {
    const auto eps = dyadic_lags(1.0 / 1024, 1, 6);
    std::vector<MomentEstimate> m(6, {1.0, 0.1, 10});
    CHECK_NOTHROW(fit_loglog(eps, m));
    CHECK_THROWS_AS(fit_loglog({eps.begin(), eps.begin() + 3}, {m.begin(), m.begin() + 3}), ContractError);
    CHECK_THROWS_AS(fit_loglog({0.1, 0.09, 0.08, 0.07}, {m.begin(), m.begin() + 4}), ContractError);
    auto rev = eps;
    std::reverse(rev.begin(), rev.end());
    CHECK_THROWS_AS(fit_loglog(rev, m), ContractError);
    auto zero = m;
    zero[2].mean = 0;
    CHECK_THROWS_AS(fit_loglog(eps, zero), ContractError);
    auto nose = m;
    nose[1].se = 0;
    CHECK_THROWS_AS(fit_loglog(eps, nose), ContractError);
    CHECK_THROWS_AS(fit_loglog(eps, {m.begin(), m.begin() + 5}), ContractError);
  }

  TEST_CASE("covariance decomposition report") {
    const TimeGrid g = TimeGrid::uniform(0.05, 1.0, 20);
    for (double H : {0.25, 0.1}) {
      const CovDecompositionReport r = verify_cov_decomposition(H, g);
      CHECK(r.pass);
      CHECK(r.max_residual < 1e-12);
      CHECK(r.max_v_residual < 1e-8);
      CHECK(r.max_xi_quad_gap < 1e-8);
    }
  }

  TEST_CASE("Brownian calibration of the increment estimator") {
    const TimeGrid g = probe_grid();
    const auto cov = build_cov([](double s, double t) { return fields::cov_fbm(s, t, 0.5); }, g);
    const PathSample B = cholesky_sample(cov, g, 17, 10000);
    const RateFit a = estimate_fbm_increments(B, 0.5, 0.5, Exec::parallel);
    const RateFit b = estimate_fbm_increments(B, 0.5, 0.5, Exec::serial);
    CHECK(a.pass);
    CHECK(std::fabs(a.slope - 1.0) < 4 * a.slope_se);
    CHECK(std::fabs(a.slope - b.slope) < 1e-10);
    for (std::size_t k = 0; k < a.epsilons.size(); ++k)
      CHECK(std::fabs(a.moments[k] - a.epsilons[k]) < 4 * a.ses[k]);
    const PathSample few = cholesky_sample(cov, g, 17, 999);
    CHECK_THROWS_AS(estimate_fbm_increments(few, 0.5, 0.5), ContractError);
    CHECK_THROWS_AS(estimate_fbm_increments(B, 0.5, 0.5 + 1.0 / 64), ContractError);
  }

  TEST_CASE("extracted X passes the fBm increment check") {
    for (double H : {0.25, 0.2}) {
      const spde::CoupledTrace tr = exact_trace(H, 10000, 5);
      const PathSample X = fields::extract_fbm(tr.v0, tr.xi, tr.params);
      const RateFit f = estimate_fbm_increments(X, H, 0.5);
      CAPTURE(H);
      CHECK(f.pass);
    }
  }

  TEST_CASE("holder slope") {
    const spde::CoupledTrace tr = exact_trace(0.25, 4000, 6);
    const RateFit f = estimate_holder_slope(tr.u0, tr.params, 0.5);
    CHECK(f.pass);
    CHECK(max_linear_law_deviation(f, tr.params, 0.5) < 4.0);
    PathSample zero = tr.u0;
    std::fill(zero.values.begin(), zero.values.end(), 0.0);
    CHECK_THROWS_AS(estimate_holder_slope(zero, tr.params, 0.5), DegenerateInputError);
  }

  TEST_CASE("linear increment moment") {
    const ModelParams p = derive_params(0.25);
    const double t = 0.5, e = 0.01;
    CHECK(linear_increment_moment(p, t, e) ==
          Approx(fields::cov_v_trace(t + e, t + e, p) + fields::cov_v_trace(t, t, p) -
                 2 * fields::cov_v_trace(t, t + e, p)));
    // leading order c^2 2^{1-K} eps^K
    const double lead = p.c_alpha * p.c_alpha * std::pow(2.0, 1 - p.K) * std::pow(1e-6, p.K);
    CHECK(linear_increment_moment(p, t, 1e-6) == Approx(lead).epsilon(1e-3));
  }

  TEST_CASE("correction rate: vanishing correction is degenerate") {
    const spde::CoupledTrace tr = exact_trace(0.25, 2000, 7);
    const DriftPair one = drift_from_f([](double) { return 1.0; }, tr.params, 0.0);
    const CorrectionRateReport r = estimate_correction_rate(tr, one, 0.5);
    CHECK(r.degenerate_zero);
    CHECK(r.pass);
    CHECK(r.max_abs_correction == 0.0);
    CHECK(r.reference_slope == Approx(2 * tr.params.G_H));
  }

  TEST_CASE("correction rate: smooth correction has slope two") {
    spde::CoupledTrace tr = exact_trace(0.25, 2000, 8);
    gen::Gen g(8);
    for (std::size_t r = 0; r < tr.u0.n_replicas; ++r) {
      const double z = 1 + 0.5 * g.normal();
      for (std::size_t j = 0; j < tr.u0.grid.size(); ++j) {
        const double t = tr.u0.grid[j];
        tr.u0.values[r * tr.u0.grid.size() + j] += z * t * t;
      }
      }
    const DriftPair one = drift_from_f([](double) { return 1.0; }, tr.params, 0.0);
    const CorrectionRateReport a = estimate_correction_rate(tr, one, 0.5, Exec::parallel);
    const CorrectionRateReport b = estimate_correction_rate(tr, one, 0.5, Exec::serial);
    CHECK_FALSE(a.degenerate_zero);
    CHECK(a.pass);
    CHECK(std::fabs(a.correction.slope - 2.0) < 0.05);
    CHECK(std::fabs(a.raw.slope - 0.5) < 0.1);
    CHECK(std::fabs(a.correction.slope - b.correction.slope) < 1e-10);
  }

  TEST_CASE("correction rate: contract") {
    spde::CoupledTrace tr = exact_trace(0.25, 100, 9);
    const DriftPair one = drift_from_f([](double) { return 1.0; }, tr.params, 0.0);
    CHECK_THROWS_AS(estimate_correction_rate(tr, one, 0.5 + 1.0 / 512), ContractError);
    tr.coupled = false;
    CHECK_THROWS_AS(estimate_correction_rate(tr, one, 0.5), ContractError);
  }

  TEST_CASE("gaussian tail probe") {
    CHECK(gaussian_tail_probe(1.0, 0.3, 0.25, 1.0) == Approx(0.68268949213708589717).epsilon(1e-14));
    CHECK(gaussian_tail_probe(0.0, 0.3, 0.25, 1.0) == 0.0);
    double prev = 2;
    for (double e : dyadic_lags(1.0 / 2048, 1, 10)) {
      const double p = gaussian_tail_probe(e, 0.35, 0.25, 0.5);
      CHECK(p < prev);
      prev = p;
    }
    CHECK_THROWS_AS(gaussian_tail_probe(0.1, 0.3, 0.25, 0.0), ContractError);
  }

  TEST_CASE("weak solution: Y proportional to X never exceeds") {
    spde::CoupledTrace tr = exact_trace(0.25, 2000, 10);
    const PathSample X = fields::extract_fbm(tr.v0, tr.xi, tr.params);
    const double g0 = 0.7;
    for (std::size_t k = 0; k < X.values.size(); ++k) tr.u0.values[k] = g0 * X.values[k] / tr.params.kappa_H;
    const DriftPair d = make_drift_pair([g0](double) { return g0; }, tr.params, 0.0);
    const WeakSolutionReport r = verify_weak_solution(tr, d, tr.params, 0.5, 0.35, 0.5);
    CHECK(r.pass);
    for (double p : r.exceed_probs) CHECK(p == 0.0);
    for (double m : r.theta_moments) CHECK(m < 1e-20);
    CHECK(r.excluded == 0);
    CHECK(r.epsilons.size() == 6);
  }

  TEST_CASE("weak solution: unrelated Y keeps exceeding") {
    spde::CoupledTrace tr = exact_trace(0.25, 2000, 11);
    const spde::CoupledTrace other = exact_trace(0.25, 2000, 12);
    tr.u0 = other.u0;
    const DriftPair d = make_drift_pair([](double) { return 0.0; }, tr.params, 0.0);
    const WeakSolutionReport r = verify_weak_solution(tr, d, tr.params, 0.5, 0.35, 0.5);
    CHECK_FALSE(r.pass);
    CHECK_THROWS_AS(verify_weak_solution(tr, d, tr.params, 0.5, 0.2, 0.5), ContractError);
    CHECK_THROWS_AS(verify_weak_solution(tr, d, tr.params, 0.0, 0.35, 0.5), ContractError);
  }

  TEST_CASE("linear law report") {
    const spde::CoupledTrace tr = exact_trace(0.2, 4000, 13);
    const LinearLawReport a = verify_linear_law(tr.v0, tr.params, Exec::parallel);
    const LinearLawReport b = verify_linear_law(tr.v0, tr.params, Exec::serial);
    CHECK(a.pass);
    CHECK(a.matrix_pass);
    CHECK(a.times.size() == 7);
    CHECK(std::fabs(a.max_rel_error - b.max_rel_error) < 1e-10);
    PathSample scaled = tr.v0;
    for (double& v : scaled.values) v *= 1.2;
    CHECK_FALSE(verify_linear_law(scaled, tr.params).pass);
  }

  TEST_CASE("kernel suite") {
    const KernelSuiteReport g = verify_kernel(2.0);
    CHECK(g.pass);
    CHECK(g.gaussian_max_error < 1e-8);
    const KernelSuiteReport s = verify_kernel(5.0 / 3.0);
    CHECK(s.pass);
    CHECK(s.gaussian_max_error == 0.0);
  }

  TEST_CASE("constants") {
    const ConstantsReport r = verify_constants(500, 1);
    CHECK(r.pass);
    CHECK(r.samples == 501);
    CHECK(r.min_ratio >= 1.6 - 1e-12);
    CHECK(r.max_ratio < 2.0);
  }
}
