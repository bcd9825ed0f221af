#include "roughdrive/gaussian_sampler.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "roughdrive/errors.hpp"
#include "roughdrive/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace roughdrive {

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw ContractError("time grid must contain at least one point");
  if (!(points_.front() >= 0.0)) throw ContractError("time grid must start at t >= 0");
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (!(points_[i] > points_[i - 1])) throw ContractError("time grid must be strictly increasing");
}

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t n) {
  if (n == 1) return TimeGrid({t0});
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  pts.back() = t1;
  return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::index_of(double t) const {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (std::fabs(points_[i] - t) <= 1e-12 * std::max(1.0, std::fabs(t))) return i;
  std::ostringstream os;
  os << "time " << t << " is not a grid point";
  throw ContractError(os.str());
}

PathSample::PathSample(TimeGrid g, std::size_t replicas, std::uint64_t seed_, std::string label_)
    : grid(std::move(g)), n_replicas(replicas), values(replicas * grid.size(), 0.0), seed(seed_),
      label(std::move(label_)) {
  if (replicas == 0) throw ContractError("a path sample needs at least one replica");
}

Eigen::MatrixXd build_cov(const CovFn& cov_fn, const TimeGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double c = cov_fn(grid[i], grid[j]);
      cov(i, j) = c;
      cov(j, i) = c;
    }

  rng::Xoshiro256pp probe(0x5eed);
  const int n_probes = static_cast<int>(std::min<Eigen::Index>(64, n * n));
  for (int k = 0; k < n_probes; ++k) {
    const auto i = static_cast<std::size_t>(probe() % grid.size());
    const auto j = static_cast<std::size_t>(probe() % grid.size());
    const double a = cov_fn(grid[i], grid[j]);
    const double b = cov_fn(grid[j], grid[i]);
    if (std::fabs(a - b) > 1e-10 * std::max(1.0, std::fabs(a))) {
      std::ostringstream os;
      os << "covariance kernel is not symmetric at (" << grid[i] << ", " << grid[j] << "): " << a
         << " vs " << b;
      throw ContractError(os.str());
    }
  }
  return cov;
}

CholeskyFactor factorize(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw ContractError("covariance matrix must be square");
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw ContractError("covariance matrix must be symmetric");

  const double max_diag = cov.rows() > 0 ? cov.diagonal().maxCoeff() : 0.0;
  if (max_diag == 0.0 && cov.cwiseAbs().maxCoeff() == 0.0) {
    return {Eigen::MatrixXd::Zero(cov.rows(), cov.cols()), 0.0};
  }

  static constexpr double kShifts[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
  for (double rel : kShifts) {
    const double jitter = rel * max_diag;
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << "Cholesky factorization failed after jitter escalation to 1e-8 * max diagonal; "
     << "smallest eigenvalue estimate " << eig.eigenvalues().minCoeff();
  throw NumericError(os.str());
}

PathSample cholesky_sample(const Eigen::MatrixXd& cov, const TimeGrid& grid, std::uint64_t seed,
                           std::size_t n_replicas, std::string label, std::string_view ns, Exec exec) {
  if (static_cast<std::size_t>(cov.rows()) != grid.size())
    throw ContractError("covariance dimension does not match the time grid");
  const CholeskyFactor factor = factorize(cov);
  PathSample out(grid, n_replicas, seed, std::move(label));
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto reps = static_cast<std::int64_t>(n_replicas);

#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::int64_t r = 0; r < reps; ++r) {
    rng::Stream stream(seed, ns, static_cast<std::uint64_t>(r));
    Eigen::VectorXd z(n);
    for (Eigen::Index j = 0; j < n; ++j) z[j] = stream.normal();
    const Eigen::VectorXd x = factor.lower.triangularView<Eigen::Lower>() * z;
    auto row = out.row(static_cast<std::size_t>(r));
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = x[j];
  }
  return out;
}

double quadrature_0_inf(const std::function<double(double)>& integrand, double singularity_order) {
  if (!(singularity_order >= 0.0 && singularity_order < 1.0))
    throw ContractError("singularity order must lie in [0, 1)");

  double err_head = 0.0, err_tail = 0.0;
  double head = 0.0, tail = 0.0;
  try {
    boost::math::quadrature::tanh_sinh<double> ts;
    // r = u^p with p = 1/(1-s) makes the head integrand bounded near 0
    const double p = 1.0 / (1.0 - singularity_order);
    auto smoothed = [&](double u) {
      if (u < 1e-30) return 0.0;
      return integrand(std::pow(u, p)) * p * std::pow(u, p - 1.0);
    };
    head = ts.integrate(smoothed, 0.0, 1.0, 1e-13, &err_head);
    boost::math::quadrature::exp_sinh<double> es;
    tail = es.integrate(integrand, 1.0, std::numeric_limits<double>::infinity(), 1e-13, &err_tail);
  } catch (const std::exception& e) {
    throw NumericError(std::string("quadrature on [0, inf) failed: ") + e.what());
  }
  const double err = err_head + err_tail;
  if (!(err <= 1e-10 * std::max(1.0, std::fabs(head + tail)))) {
    std::ostringstream os;
    os << "quadrature on [0, inf) did not converge: error estimate " << err;
    throw NumericError(os.str());
  }
  return head + tail;
}

}  // namespace roughdrive
