#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roughdrive/exec.hpp"

namespace roughdrive {

/// Strictly increasing sample times, first point >= 0.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> points);

  /// n points t0, t0 + h, ..., t1.
  static TimeGrid uniform(double t0, double t1, std::size_t n);

  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  const std::vector<double>& points() const noexcept { return points_; }

  /// Index of the point equal to t within 1e-12 relative; throws ContractError if absent.
  std::size_t index_of(double t) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> points_;
};

/// n_replicas time series on a shared grid, stored row-major.
struct PathSample {
  TimeGrid grid;
  std::size_t n_replicas = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string label;

  PathSample() = default;
  PathSample(TimeGrid g, std::size_t replicas, std::uint64_t seed_, std::string label_);

  std::span<double> row(std::size_t r) { return {values.data() + r * grid.size(), grid.size()}; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * grid.size(), grid.size()};
  }
  double at(std::size_t r, std::size_t j) const { return values[r * grid.size() + j]; }
};

using CovFn = std::function<double(double, double)>;

/// Covariance matrix of cov_fn on the grid. The kernel's symmetry is probed on
/// up to 64 pseudo-random pairs; asymmetry beyond 1e-10 throws ContractError.
Eigen::MatrixXd build_cov(const CovFn& cov_fn, const TimeGrid& grid);

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0;  ///< diagonal shift that was needed (absolute)
};

/// Cholesky with jitter escalation 0, 1e-12, ..., 1e-8 (relative to the
/// largest diagonal entry). Throws NumericError with the smallest eigenvalue
/// when all attempts fail.
CholeskyFactor factorize(const Eigen::MatrixXd& cov);

/// Rows are i.i.d. N(0, cov). Replica r draws from stream (seed, ns, r).
PathSample cholesky_sample(const Eigen::MatrixXd& cov, const TimeGrid& grid, std::uint64_t seed,
                           std::size_t n_replicas, std::string label = "sample",
                           std::string_view ns = "sample", Exec exec = Exec::parallel);

/// int_0^inf integrand(r) dr for integrands behaving like r^-s near 0
/// (0 <= s < 1) and decaying at least algebraically (integrably) at infinity.
/// Double-exponential rules: tanh-sinh on [0, 1], exp-sinh on [1, inf).
/// Throws NumericError when the error estimate exceeds 1e-10.
double quadrature_0_inf(const std::function<double(double)>& integrand, double singularity_order);

}  // namespace roughdrive
