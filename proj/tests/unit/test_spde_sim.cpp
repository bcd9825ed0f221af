#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "roughdrive/errors.hpp"
#include "roughdrive/fields.hpp"
#include "roughdrive/spde_sim.hpp"

using namespace roughdrive;
using namespace roughdrive::spde;

namespace {

GridConfig small_grid(std::size_t N = 64, double T = 0.25, std::vector<double> rec = {0.0, 0.125, 0.25}) {
  return GridConfig::make(8.0, N, 1.0 / 256, T, rec);
}

struct Moment {
  double mean, se;
};

Moment second_moment_at(const PathSample& s, std::size_t j) {
  double m = 0, m2 = 0;
  for (std::size_t r = 0; r < s.n_replicas; ++r) {
    const double x = s.at(r, j) * s.at(r, j);
    m += x;
    m2 += x * x;
  }
  const double n = static_cast<double>(s.n_replicas);
  m /= n;
  return {m, std::sqrt((m2 / n - m * m) / n)};
}

}  // namespace

TEST_SUITE("spde_sim") {
  TEST_CASE("grid config") {
    const GridConfig g = small_grid();
    CHECK(g.n_steps == 64);
    CHECK(g.record_steps == std::vector<std::size_t>{0, 32, 64});
    CHECK(g.horizon() == doctest::Approx(0.25));
    CHECK(g.record_grid().points() == std::vector<double>{0.0, 0.125, 0.25});

    CHECK_THROWS_AS(GridConfig::make(8.0, 64, 1.0 / 256, 0.25, {0.1}), ConfigError);
    CHECK_THROWS_AS(GridConfig::make(8.0, 100, 1.0 / 256, 0.25, {0.25}), ConfigError);
    CHECK_THROWS_AS(GridConfig::make(-1.0, 64, 1.0 / 256, 0.25, {0.25}), ConfigError);
    CHECK_THROWS_AS(GridConfig::make(8.0, 64, 1.0 / 256, 0.25, {0.5}), ConfigError);
    CHECK_THROWS_AS(GridConfig::make(8.0, 64, 0.0, 0.25, {0.25}), ConfigError);
    try {
      GridConfig::make(-1.0, 100, 1.0 / 256, 0.25, {});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.violations().size() == 3);
    }
  }

  TEST_CASE("eigenvalues") {
    const GridConfig g = small_grid();
    const auto lam = eigenvalues(g, 5.0 / 3.0);
    REQUIRE(lam.size() == 33);
    CHECK(lam[0] == 0.0);
    for (std::size_t j = 1; j < lam.size(); ++j)
      CHECK(lam[j] == doctest::Approx(0.5 * std::pow(2 * std::numbers::pi * j / 8.0, 5.0 / 3.0)).epsilon(1e-14));
  }

  TEST_CASE("noise increments") {
    const std::size_t N = 64, half = N / 2;
    const double dt = 1.0 / 256, L = 8.0;
    std::vector<std::complex<double>> a(half + 1), b(half + 1), c(half + 1);
    noise_increment(a, N, dt, L, 5, 3, 7);
    noise_increment(b, N, dt, L, 5, 3, 7);
    CHECK(a == b);
    CHECK(a[0].imag() == 0.0);
    CHECK(a[half].imag() == 0.0);
    noise_increment(c, N, dt, L, 5, 3, 7, 1.0, true);
    for (std::size_t j = 0; j <= half; ++j) {
      CHECK(c[j].real() == a[j].real());
      CHECK(c[j].imag() == 0.0);
    }
    noise_increment(c, N, dt, L, 5, 3, 7, 0.5);
    for (std::size_t j = 0; j <= half; ++j) CHECK(c[j] == 0.5 * a[j]);

    // E|dW_j|^2 = dt / L, split evenly between real and imaginary parts inside
    const std::size_t n = 20000;
    std::vector<double> re(half + 1), im(half + 1), cross(half + 1);
    for (std::size_t r = 0; r < n; ++r) {
      noise_increment(a, N, dt, L, 11, 0, r);
      noise_increment(b, N, dt, L, 11, 1, r);
      for (std::size_t j = 0; j <= half; ++j) {
        re[j] += a[j].real() * a[j].real();
        im[j] += a[j].imag() * a[j].imag();
        cross[j] += a[j].real() * b[j].real();
      }
    }
    const double v = dt / L, tol = 5 * v * std::sqrt(2.0 / n);
    for (std::size_t j = 0; j <= half; ++j) {
      CAPTURE(j);
      const bool real_mode = j == 0 || j == half;
      CHECK(std::fabs(re[j] / n - (real_mode ? v : v / 2)) < tol);
      CHECK(std::fabs(im[j] / n - (real_mode ? 0.0 : v / 2)) < tol);
      CHECK(std::fabs(cross[j] / n) < tol);
    }
  }

  TEST_CASE("value at origin sums the Hermitian spectrum") {
    std::vector<std::complex<double>> m{{1.0, 9.0}, {0.5, 2.0}, {0.25, -3.0}, {2.0, 7.0}};
    CHECK(value_at_origin(m) == doctest::Approx(1.0 + 2 * (0.5 + 0.25) + 2.0));
  }

  TEST_CASE("no noise leaves v at zero") {
    const ModelParams p = derive_params(0.25);
    SimOptions opts;
    opts.noise_scale = 0.0;
    const PathSample v = simulate_linear(small_grid(), p, 1, 8, opts);
    for (double x : v.values) CHECK(x == 0.0);
    CHECK(v.label == "v0");
  }

  TEST_CASE("zero drift keeps u at its initial value") {
    const ModelParams p = derive_params(0.2, 0.3);
    const DriftPair zero = drift_from_f([](double) { return 0.0; }, p, 0.0);
    const PathSample u = simulate_nonlinear(small_grid(), p, zero, 1, 8);
    for (double x : u.values) CHECK(x == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(u.label == "u0");
  }

  TEST_CASE("unit drift reproduces the linear trace bit for bit") {
    for (double H : {0.25, 0.15}) {
      const ModelParams p = derive_params(H);
      const DriftPair one = drift_from_f([](double) { return 1.0; }, p, 0.0);
      const CoupledTrace tr = simulate_coupled(small_grid(), p, one, 3, 16);
      CHECK(tr.coupled);
      CHECK(tr.u0.values == tr.v0.values);
      const PathSample v = simulate_linear(small_grid(), p, 3, 16);
      CHECK(v.values == tr.v0.values);
      CHECK(tr.xi.grid == tr.v0.grid);
    }
  }

  TEST_CASE("determinism and serial/parallel agreement") {
    const ModelParams p = derive_params(0.2, 0.1);
    const DriftPair d = make_drift_pair([](double x) { return std::sin(x); }, p, 1.0);
    SimOptions serial;
    serial.exec = Exec::serial;
    const CoupledTrace a = simulate_coupled(small_grid(), p, d, 9, 12);
    const CoupledTrace b = simulate_coupled(small_grid(), p, d, 9, 12);
    const CoupledTrace c = simulate_coupled(small_grid(), p, d, 9, 12, serial);
    CHECK(a.u0.values == b.u0.values);
    CHECK(a.u0.values == c.u0.values);
    CHECK(a.v0.values == c.v0.values);
    CHECK(a.xi.values == c.xi.values);
    const CoupledTrace e = simulate_coupled(small_grid(), p, d, 10, 12);
    CHECK(a.u0.values != e.u0.values);
    // replica r does not depend on how many replicas run
    const CoupledTrace f = simulate_coupled(small_grid(), p, d, 9, 5);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t j = 0; j < 3; ++j) CHECK(f.u0.at(r, j) == a.u0.at(r, j));
  }

  TEST_CASE("non-finite drift is a numeric error naming the step") {
    const ModelParams p = derive_params(0.25);
    const DriftPair bad = drift_from_f([](double) { return std::numeric_limits<double>::quiet_NaN(); }, p, 1.0);
    try {
      simulate_nonlinear(small_grid(), p, bad, 1, 2);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
    const DriftPair blowup = drift_from_f([](double x) { return x > 0.5 ? std::numeric_limits<double>::infinity() : 1.0; }, p, 1.0);
    CHECK_THROWS_AS(simulate_nonlinear(small_grid(), p, blowup, 1, 64), NumericError);
  }

  TEST_CASE("linear trace variance matches c^2 t^K") {
    for (double H : {0.25, 0.2}) {
      const ModelParams p = derive_params(H);
      const GridConfig g = small_grid(256);
      const PathSample v = simulate_linear(g, p, 21, 4000);
      for (std::size_t j = 1; j < 3; ++j) {
        const double t = g.record_grid()[j];
        const Moment m = second_moment_at(v, j);
        const double exact = fields::cov_v_trace(t, t, p);
        CAPTURE(H);
        CAPTURE(t);
        CHECK(std::fabs(m.mean - exact) < 3 * m.se + 0.02 * exact);
      }
    }
  }

  TEST_CASE("nonlinear second moment is stable under dt halving") {
    const ModelParams p = derive_params(0.25, 0.2);
    const DriftPair d = make_drift_pair([](double x) { return std::sin(x); }, p, 1.0);
    const GridConfig coarse = GridConfig::make(8.0, 128, 1.0 / 128, 0.25, {0.25});
    const GridConfig fine = GridConfig::make(8.0, 128, 1.0 / 256, 0.25, {0.25});
    const Moment a = second_moment_at(simulate_nonlinear(coarse, p, d, 4, 3000), 0);
    const Moment b = second_moment_at(simulate_nonlinear(fine, p, d, 5, 3000), 0);
    CHECK(std::isfinite(a.mean));
    CHECK(std::fabs(a.mean - b.mean) < 3 * std::hypot(a.se, b.se) + 0.05 * b.mean);
  }
}
