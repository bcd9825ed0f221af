#include "roughdrive/stable_kernel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "roughdrive/csv.hpp"
#include "roughdrive/errors.hpp"

namespace roughdrive::kernel {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("stability index alpha must lie in (1, 2]");
}

void require_time(double t) {
  if (!(t > 0.0)) throw DomainError("time argument must be positive");
}

// exp(-xi^alpha / 2) < 1e-16 beyond this frequency
double cutoff_frequency(double alpha) {
  return std::pow(2.0 * 16.0 * std::numbers::ln10, 1.0 / alpha);
}

// Fixed 30-point Gauss-Legendre on a panel short enough for the integrand to
// be resolved to rounding; the 20-point rule serves as the error diagnostic.
double panel_integral(double alpha, double x, double a, double b) {
  using boost::math::quadrature::gauss;
  auto integrand = [alpha, x](double xi) {
    return std::cos(xi * x) * std::exp(-0.5 * std::pow(xi, alpha));
  };
  const double scale = std::exp(-0.5 * std::pow(a, alpha)) * (b - a);
  double fine = 0.0, coarse = 0.0;
  if (a == 0.0 && alpha < 2.0) {
    // xi^alpha is not smooth at 0; tanh-sinh absorbs the endpoint
    boost::math::quadrature::tanh_sinh<double> ts;
    double err = 0.0;
    fine = ts.integrate(integrand, a, b, 1e-14, &err);
    coarse = fine + err;
  } else {
    fine = gauss<double, 30>::integrate(integrand, a, b);
    coarse = gauss<double, 20>::integrate(integrand, a, b);
  }
  if (!(std::fabs(fine - coarse) <= 1e-12 * scale + 1e-18)) {
    std::ostringstream os;
    os << "stable density inversion did not converge: alpha=" << alpha << " x=" << x
       << " panel=[" << a << ", " << b << "] rule difference=" << std::fabs(fine - coarse);
    throw NumericError(os.str());
  }
  return fine;
}

// Fourth-order finite-difference slopes, using the even symmetry p(-x) = p(x)
// near 0, then the Fritsch-Carlson limiter so the interpolant stays monotone.
std::vector<double> monotone_slopes(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> d(n, 0.0);
  auto at = [&](std::ptrdiff_t i) { return y[static_cast<std::size_t>(i < 0 ? -i : i)]; };
  for (std::size_t i = 1; i + 2 < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    d[i] = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h);
  }
  // one-sided fourth-order stencils at the right end
  for (std::size_t i = n - 2; i < n; ++i) {
    const double f0 = y[i], f1 = y[i - 1], f2 = y[i - 2], f3 = y[i - 3], f4 = y[i - 4];
    d[i] = (25.0 * f0 - 48.0 * f1 + 36.0 * f2 - 16.0 * f3 + 3.0 * f4) / (12.0 * h);
  }
  d[0] = 0.0;

  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / h;
  for (std::size_t i = 1; i < n; ++i) {
    const double left = delta[i - 1];
    const double right = i + 1 < n ? delta[i] : left;
    if (left * right <= 0.0 || d[i] * left < 0.0) d[i] = 0.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      d[i] = d[i + 1] = 0.0;
      continue;
    }
    const double a = d[i] / delta[i], b = d[i + 1] / delta[i];
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      d[i] = tau * a * delta[i];
      d[i + 1] = tau * b * delta[i];
    }
  }
  return d;
}

}  // namespace

double char_fn(double alpha, double t, double xi) {
  require_time(t);
  return std::exp(-0.5 * t * std::pow(std::fabs(xi), alpha));
}

double p1_inversion(double alpha, double x) {
  require_alpha(alpha);
  x = std::fabs(x);
  const double xi_max = cutoff_frequency(alpha);
  double sum = 0.0;
  // panel edges at the zeros (k + 1/2) pi / x of cos(xi x), with panels
  // split further to width <= 0.5
  constexpr double max_width = 0.5;
  const double half_period = x > 0.0 ? std::numbers::pi / x : 2.0 * xi_max;
  double zero = 0.5 * half_period;
  double a = 0.0;
  while (a < xi_max) {
    const double b = std::min({zero, a + max_width, xi_max});
    sum += panel_integral(alpha, x, a, b);
    if (b >= zero) zero += half_period;
    a = b;
  }
  return sum / std::numbers::pi;
}

KernelTable build_table(double alpha, std::size_t resolution, double x_max) {
  require_alpha(alpha);
  if (resolution < 16) throw DomainError("kernel table resolution must be at least 16 points");
  if (!(x_max > 5.0)) throw DomainError("kernel table x_max must exceed 5");

  KernelTable t;
  t.alpha = alpha;
  t.x_max = x_max;
  t.grid.resize(resolution);
  t.values.resize(resolution);
  const double h = x_max / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    t.grid[i] = h * static_cast<double>(i);
    // inversion rounding is ~1e-17; values below 1e-14 are stored as 0
    const double v = p1_inversion(alpha, t.grid[i]);
    t.values[i] = v < 1e-14 ? 0.0 : v;
  }
  t.grid.back() = x_max;
  t.slopes = monotone_slopes(t.values, h);

  if (alpha < 2.0) {
    // two-point fit of C1 x^-(1+a) + C2 x^-(1+2a) at 0.8 x_max and x_max
    const std::size_t i1 = resolution - 1;
    const auto i0 = static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(i1)));
    const double x0 = t.grid[i0], x1 = t.grid[i1];
    const double a00 = std::pow(x0, -1.0 - alpha), a01 = std::pow(x0, -1.0 - 2.0 * alpha);
    const double a10 = std::pow(x1, -1.0 - alpha), a11 = std::pow(x1, -1.0 - 2.0 * alpha);
    const double det = a00 * a11 - a01 * a10;
    t.tail_constant = (t.values[i0] * a11 - a01 * t.values[i1]) / det;
    t.tail_constant_2 = (a00 * t.values[i1] - t.values[i0] * a10) / det;
  }
  return t;
}

double KernelTable::p1(double x) const {
  x = std::fabs(x);
  if (x >= x_max) {
    return tail_constant * std::pow(x, -1.0 - alpha) + tail_constant_2 * std::pow(x, -1.0 - 2.0 * alpha);
  }
  const double h = grid[1] - grid[0];
  auto i = static_cast<std::size_t>(x / h);
  if (i >= grid.size() - 1) i = grid.size() - 2;
  const double s = (x - grid[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return std::max(0.0, h00 * values[i] + h10 * h * slopes[i] + h01 * values[i + 1] + h11 * h * slopes[i + 1]);
}

double KernelTable::tail_mass() const {
  return 2.0 * (tail_constant * std::pow(x_max, -alpha) / alpha +
                tail_constant_2 * std::pow(x_max, -2.0 * alpha) / (2.0 * alpha));
}

double KernelTable::total_mass() const {
  double body = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    body += h * (values[i] + values[i + 1]) / 2.0 + h * h * (slopes[i] - slopes[i + 1]) / 12.0;
  }
  return 2.0 * body + tail_mass();
}

double KernelTable::l2_norm_sq() const {
  // 4-point Gauss-Legendre on each cell of the squared interpolant (degree 6)
  static constexpr double gx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                   0.9305681557970263};
  static constexpr double gw[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                   0.1739274225687269};
  double body = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    for (int q = 0; q < 4; ++q) {
      const double v = p1(grid[i] + gx[q] * h);
      body += gw[q] * h * v * v;
    }
  }
  // tail: squared leading term only; C2 cross terms are below 1e-12 here
  const double tail = tail_constant * tail_constant * std::pow(x_max, -1.0 - 2.0 * alpha) / (1.0 + 2.0 * alpha);
  return 2.0 * (body + tail);
}

double density(const KernelTable& table, double t, double x) {
  require_time(t);
  const double scale = std::pow(t, -1.0 / table.alpha);
  return scale * table.p1(std::fabs(x) * scale);
}

double l2_norm_sq(double alpha, double t) {
  require_alpha(alpha);
  require_time(t);
  return std::tgamma(1.0 / alpha) / (alpha * std::numbers::pi * std::pow(t, 1.0 / alpha));
}

double peak(double alpha, double t) {
  require_alpha(alpha);
  require_time(t);
  return std::pow(2.0, 1.0 / alpha) * std::tgamma(1.0 / alpha) /
         (alpha * std::numbers::pi * std::pow(t, 1.0 / alpha));
}

void write_table_csv(std::ostream& os, const KernelTable& table) {
  os << csv::kVersionLine << '\n';
  os << "# alpha=" << csv::format_double(table.alpha) << '\n';
  os << "x,p1_of_x\n";
  for (std::size_t i = 0; i < table.grid.size(); ++i)
    os << csv::format_double(table.grid[i]) << ',' << csv::format_double(table.values[i]) << '\n';
}

}  // namespace roughdrive::kernel
