#pragma once

// Spectral Galerkin solver for
//   du = (1/2) Delta_{alpha/2} u dt + f(c_alpha u) W(dt, dx)   (nonlinear, u_0 = Y0)
//   dv = (1/2) Delta_{alpha/2} v dt +              W(dt, dx)   (linear,    v_0 = 0)
// on the periodic cell [0, L) with N grid points.
//
// Fields are stored as the N/2 + 1 non-negative Fourier modes of a real
// function, u(x_k) = sum_j u_j exp(2 pi i j k / N) over the full Hermitian
// spectrum. White-noise increments are independent per mode with
// E|dW_j|^2 = dt / L (modes 0 and N/2 are real). Mode j relaxes at rate
// lambda_j = |2 pi j / L|^alpha / 2.
//
// Both equations use the same increments dW_j. The linear update is the exact
// Ornstein-Uhlenbeck transition
//   v_j <- e^{-lambda_j dt} v_j + phi_j dW_j,  phi_j = sqrt((1 - e^{-2 lambda_j dt}) / (2 lambda_j dt)),
// and the nonlinear update is exponential Euler with f frozen at step start,
//   u_j <- e^{-lambda_j dt} u_j + phi_j [f(c_alpha u) * dW]_j,
// where the product is formed pointwise on the grid. When f(c_alpha u) is
// constant on the grid the product is formed modewise, so f == 1 reproduces
// the linear run bit for bit.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "roughdrive/exec.hpp"
#include "roughdrive/gaussian_sampler.hpp"
#include "roughdrive/params.hpp"

namespace roughdrive::spde {

struct GridConfig {
  double L = 16.0;
  std::size_t N = 1024;
  double dt = 1.0 / 2048;
  std::size_t n_steps = 2048;
  std::vector<std::size_t> record_steps;  ///< sorted, unique, each <= n_steps

  /// Maps horizon T and record times onto step indices; each record time must
  /// be an integer multiple of dt (to 1e-9 relative).
  static GridConfig make(double L, std::size_t N, double dt, double T,
                         const std::vector<double>& record_times);

  /// Throws ConfigError listing every violated invariant.
  void validate() const;

  TimeGrid record_grid() const;
  double horizon() const { return dt * static_cast<double>(n_steps); }
};

struct SimOptions {
  Exec exec = Exec::parallel;
  double noise_scale = 1.0;  ///< multiplies every noise increment; 0 switches the noise off
};

/// lambda_j for j = 0 .. N/2.
std::vector<double> eigenvalues(const GridConfig& cfg, double alpha);

/// Noise increment dW_j, j = 0 .. N/2, for (seed, step, replica). Stream
/// namespace "field". Deterministic in its arguments. Real parts are drawn
/// first, so real_parts_only gives the same real parts with zero imaginary
/// parts at half the cost (enough for the linear trace at x = 0).
void noise_increment(std::span<std::complex<double>> out, std::size_t N, double dt, double L,
                     std::uint64_t seed, std::uint64_t step, std::uint64_t replica,
                     double scale = 1.0, bool real_parts_only = false);
std::vector<std::complex<double>> noise_increment(const GridConfig& cfg, std::uint64_t seed,
                                                  std::uint64_t step, std::uint64_t replica);

/// Field value at x = 0 (grid point 0) from its modes.
double value_at_origin(std::span<const std::complex<double>> modes);

/// Per-replica series v_t(0) on the record grid. Label "v0".
PathSample simulate_linear(const GridConfig& cfg, const ModelParams& params, std::uint64_t seed,
                           std::size_t n_replicas, const SimOptions& opts = {});

/// Per-replica series u_t(0) on the record grid. Label "u0".
PathSample simulate_nonlinear(const GridConfig& cfg, const ModelParams& params, const DriftPair& drift,
                              std::uint64_t seed, std::size_t n_replicas, const SimOptions& opts = {});

/// u and v of the same replica consume identical noise increments; xi comes
/// from the disjoint "xi" stream namespace on the record grid.
struct CoupledTrace {
  GridConfig grid_cfg;
  PathSample u0;
  PathSample v0;
  PathSample xi;
  std::uint64_t seed = 0;
  ModelParams params;
  bool coupled = false;
};

CoupledTrace simulate_coupled(const GridConfig& cfg, const ModelParams& params, const DriftPair& drift,
                              std::uint64_t seed, std::size_t n_replicas, const SimOptions& opts = {});

/// CSV dump with columns replica,t,u0,v0,xi.
void write_trace_csv(std::ostream& os, const CoupledTrace& trace);

}  // namespace roughdrive::spde
