#include "roughdrive/spde_sim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "roughdrive/csv.hpp"
#include "roughdrive/errors.hpp"
#include "roughdrive/fields.hpp"
#include "roughdrive/rng.hpp"

namespace roughdrive::spde {

using cplx = std::complex<double>;

GridConfig GridConfig::make(double L, std::size_t N, double dt, double T,
                            const std::vector<double>& record_times) {
  GridConfig cfg;
  cfg.L = L;
  cfg.N = N;
  cfg.dt = dt;
  std::vector<std::string> errors;
  if (!(dt > 0.0)) errors.push_back("dt must be positive");
  if (!(T > 0.0)) errors.push_back("T must be positive");
  if (!errors.empty()) throw ConfigError(errors);

  const double steps = T / dt;
  cfg.n_steps = static_cast<std::size_t>(std::llround(steps));
  if (std::fabs(steps - static_cast<double>(cfg.n_steps)) > 1e-9 * steps)
    errors.push_back("T must be an integer multiple of dt");
  for (double t : record_times) {
    const double k = t / dt;
    const auto ki = static_cast<std::size_t>(std::llround(k));
    if (t < 0.0 || std::fabs(k - static_cast<double>(ki)) > 1e-9 * std::max(1.0, k)) {
      std::ostringstream os;
      os << "record time " << t << " is not a step time (multiple of dt)";
      errors.push_back(os.str());
      continue;
    }
    cfg.record_steps.push_back(ki);
  }
  if (!errors.empty()) throw ConfigError(errors);
  std::sort(cfg.record_steps.begin(), cfg.record_steps.end());
  cfg.record_steps.erase(std::unique(cfg.record_steps.begin(), cfg.record_steps.end()),
                         cfg.record_steps.end());
  cfg.validate();
  return cfg;
}

void GridConfig::validate() const {
  std::vector<std::string> errors;
  if (N < 64 || (N & (N - 1)) != 0) errors.push_back("N must be a power of 2 and at least 64");
  if (!(dt > 0.0)) errors.push_back("dt must be positive");
  if (!(L > 0.0)) errors.push_back("L must be positive");
  if (n_steps == 0) errors.push_back("n_steps must be positive");
  if (record_steps.empty()) errors.push_back("at least one record time is required");
  for (std::size_t i = 0; i < record_steps.size(); ++i) {
    if (record_steps[i] > n_steps) errors.push_back("record times must not exceed the horizon");
    if (i > 0 && record_steps[i] <= record_steps[i - 1])
      errors.push_back("record steps must be strictly increasing");
  }
  if (!errors.empty()) throw ConfigError(errors);
}

TimeGrid GridConfig::record_grid() const {
  std::vector<double> t(record_steps.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dt * static_cast<double>(record_steps[i]);
  return TimeGrid(std::move(t));
}

std::vector<double> eigenvalues(const GridConfig& cfg, double alpha) {
  std::vector<double> lam(cfg.N / 2 + 1);
  const double k0 = 2.0 * std::numbers::pi / cfg.L;
  for (std::size_t j = 0; j < lam.size(); ++j)
    lam[j] = 0.5 * std::pow(k0 * static_cast<double>(j), alpha);
  return lam;
}

void noise_increment(std::span<cplx> out, std::size_t N, double dt, double L, std::uint64_t seed,
                     std::uint64_t step, std::uint64_t replica, double scale, bool real_parts_only) {
  const std::size_t half = N / 2;
  thread_local std::vector<double> z;
  z.resize(real_parts_only ? half + 1 : N);
  rng::Stream(seed, "field", replica, step).fill_normal(z);
  const double sd = scale * std::sqrt(dt / L);
  const double sd_c = sd * std::numbers::sqrt2 / 2.0;
  // real parts of modes 0..N/2 first, then imaginary parts of 1..N/2-1
  out[0] = cplx(sd * z[0], 0.0);
  if (real_parts_only) {
    for (std::size_t j = 1; j < half; ++j) out[j] = cplx(sd_c * z[j], 0.0);
  } else {
    for (std::size_t j = 1; j < half; ++j) out[j] = cplx(sd_c * z[j], sd_c * z[half + j]);
  }
  out[half] = cplx(sd * z[half], 0.0);
}

std::vector<cplx> noise_increment(const GridConfig& cfg, std::uint64_t seed, std::uint64_t step,
                                  std::uint64_t replica) {
  std::vector<cplx> out(cfg.N / 2 + 1);
  noise_increment(out, cfg.N, cfg.dt, cfg.L, seed, step, replica);
  return out;
}

double value_at_origin(std::span<const cplx> modes) {
  const std::size_t half = modes.size() - 1;
  double interior = 0.0;
  for (std::size_t j = 1; j < half; ++j) interior += modes[j].real();
  return modes[0].real() + 2.0 * interior + modes[half].real();
}

namespace {

// Process-wide FFTW plans per size. Planning is not thread-safe; execution
// with new arrays is.
struct Plans {
  fftw_plan c2r = nullptr;
  fftw_plan r2c = nullptr;
};

Plans plans_for(std::size_t N) {
  static std::mutex mu;
  static std::vector<std::pair<std::size_t, Plans>> cache;
  std::lock_guard lock(mu);
  for (const auto& [n, p] : cache)
    if (n == N) return p;
  auto* r = static_cast<double*>(fftw_malloc(sizeof(double) * N));
  auto* c = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (N / 2 + 1)));
  Plans p;
  const int n = static_cast<int>(N);
  p.c2r = fftw_plan_dft_c2r_1d(n, c, r, FFTW_ESTIMATE);
  p.r2c = fftw_plan_dft_r2c_1d(n, r, c, FFTW_ESTIMATE);
  fftw_free(r);
  fftw_free(c);
  cache.emplace_back(N, p);
  return p;
}

template <class T>
struct FftwBuffer {
  T* ptr = nullptr;
  explicit FftwBuffer(std::size_t n) : ptr(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

// Stored twice per mode so the updates run over the interleaved re/im doubles.
struct StepCoefficients {
  std::vector<double> decay;  // e^{-lambda dt}
  std::vector<double> phi;    // sqrt((1 - e^{-2 lambda dt}) / (2 lambda dt))
};

// x <- decay * x + phi * w over interleaved complex arrays
void ou_update(std::vector<cplx>& x, const std::vector<cplx>& w, const StepCoefficients& c) {
  auto* xd = reinterpret_cast<double*>(x.data());
  const auto* wd = reinterpret_cast<const double*>(w.data());
  const double* d = c.decay.data();
  const double* p = c.phi.data();
  const std::size_t n = c.decay.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) xd[i] = d[i] * xd[i] + p[i] * wd[i];
}

StepCoefficients step_coefficients(const GridConfig& cfg, double alpha) {
  const auto lam = eigenvalues(cfg, alpha);
  StepCoefficients c;
  c.decay.resize(2 * lam.size());
  c.phi.resize(2 * lam.size());
  for (std::size_t j = 0; j < lam.size(); ++j) {
    const double x = lam[j] * cfg.dt;
    c.decay[2 * j] = c.decay[2 * j + 1] = std::exp(-x);
    c.phi[2 * j] = c.phi[2 * j + 1] = x == 0.0 ? 1.0 : std::sqrt(-std::expm1(-2.0 * x) / (2.0 * x));
  }
  return c;
}

enum class Mode { linear, nonlinear, coupled };

// Per-thread scratch for one replica at a time.
class ReplicaKernel {
 public:
  ReplicaKernel(const GridConfig& cfg, const ModelParams& params, const DriftPair* drift,
                const StepCoefficients& coef, Plans plans, double noise_scale)
      : cfg_(cfg), params_(params), drift_(drift), coef_(coef), plans_(plans),
        noise_scale_(noise_scale), half_(cfg.N / 2), u_(half_ + 1), v_(half_ + 1), eta_(half_ + 1),
        forced_(half_ + 1), cbuf_(half_ + 1), field_(cfg.N), noise_(cfg.N), prod_(cfg.N) {}

  // Writes recorded values into u_row / v_row (either may be empty).
  void run(Mode mode, std::uint64_t seed, std::uint64_t replica, std::span<double> u_row,
           std::span<double> v_row) {
    const bool do_u = mode != Mode::linear;
    const bool do_v = mode != Mode::nonlinear;
    std::fill(u_.begin(), u_.end(), cplx{});
    std::fill(v_.begin(), v_.end(), cplx{});
    u_[0] = cplx(params_.Y0, 0.0);

    std::size_t next = 0;
    const auto& rec = cfg_.record_steps;
    auto record = [&](std::size_t step) {
      while (next < rec.size() && rec[next] == step) {
        if (do_u) u_row[next] = value_at_origin(u_);
        if (do_v) v_row[next] = value_at_origin(v_);
        ++next;
      }
    };
    record(0);
    const std::size_t last = rec.back();

    for (std::size_t step = 1; step <= last; ++step) {
      noise_increment(eta_, cfg_.N, cfg_.dt, cfg_.L, seed, step - 1, replica, noise_scale_, !do_u);
      if (do_v) {
        ou_update(v_, eta_, coef_);
      }
      if (do_u) {
        if (!nonlinear_forcing()) non_finite(step - 1, replica);
        ou_update(u_, forced_, coef_);
      }
      record(step);
      if (do_u && next > 0 && rec[next - 1] == step && !std::isfinite(u_row[next - 1])) non_finite(step, replica);
    }
  }

 private:
  [[noreturn]] void non_finite(std::size_t step, std::uint64_t replica) const {
    std::ostringstream os;
    os << "non-finite field value at step " << step << " (t = " << cfg_.dt * static_cast<double>(step)
       << ", replica " << replica << ")";
    throw NumericError(os.str());
  }

  // forced_ = modes of f(c_alpha u) * dW; false if u or f(c_alpha u) is not finite
  bool nonlinear_forcing() {
    const std::size_t N = cfg_.N;
    std::memcpy(cbuf_.ptr, u_.data(), sizeof(cplx) * (half_ + 1));
    fftw_execute_dft_c2r(plans_.c2r, cbuf_.ptr, field_.ptr);

    const double c = params_.c_alpha;
    const auto& f = drift_->f;
    bool constant = true;
    // 0 * x is NaN for non-finite x, so check stays finite iff every u and f value is
    double check = 0.0 * field_.ptr[0];
    const double f0 = f(c * field_.ptr[0]);
    field_.ptr[0] = f0;
    check += 0.0 * f0;
    for (std::size_t k = 1; k < N; ++k) {
      const double uk = field_.ptr[k];
      const double fk = f(c * uk);
      constant = constant && (fk == f0);
      check += 0.0 * (uk + fk);
      field_.ptr[k] = fk;
    }
    if (!std::isfinite(check)) return false;

    if (constant) {
      for (std::size_t j = 0; j <= half_; ++j) forced_[j] = f0 * eta_[j];
      return true;
    }
    std::memcpy(cbuf_.ptr, eta_.data(), sizeof(cplx) * (half_ + 1));
    fftw_execute_dft_c2r(plans_.c2r, cbuf_.ptr, noise_.ptr);
    for (std::size_t k = 0; k < N; ++k) prod_.ptr[k] = field_.ptr[k] * noise_.ptr[k];
    fftw_execute_dft_r2c(plans_.r2c, prod_.ptr, cbuf_.ptr);
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t j = 0; j <= half_; ++j)
      forced_[j] = cplx(cbuf_.ptr[j][0] * inv_n, cbuf_.ptr[j][1] * inv_n);
    forced_[0].imag(0.0);
    forced_[half_].imag(0.0);
    return true;
  }

  const GridConfig& cfg_;
  const ModelParams& params_;
  const DriftPair* drift_;
  const StepCoefficients& coef_;
  Plans plans_;
  double noise_scale_;
  std::size_t half_;
  std::vector<cplx> u_, v_, eta_, forced_;
  FftwBuffer<fftw_complex> cbuf_;
  FftwBuffer<double> field_, noise_, prod_;
};

void run_replicas(Mode mode, const GridConfig& cfg, const ModelParams& params, const DriftPair* drift,
                  std::uint64_t seed, std::size_t n_replicas, const SimOptions& opts, PathSample* u_out,
                  PathSample* v_out) {
  const auto coef = step_coefficients(cfg, params.alpha);
  const Plans plans = plans_for(cfg.N);
  const auto reps = static_cast<std::int64_t>(n_replicas);

  // exceptions must not escape an OpenMP region
  std::string failure;
  bool failed = false;

#pragma omp parallel if (opts.exec == Exec::parallel)
  {
    ReplicaKernel kernel(cfg, params, drift, coef, plans, opts.noise_scale);
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t r = 0; r < reps; ++r) {
      bool skip;
#pragma omp atomic read
      skip = failed;
      if (skip) continue;
      const auto ru = static_cast<std::size_t>(r);
      try {
        kernel.run(mode, seed, ru, u_out ? u_out->row(ru) : std::span<double>{},
                   v_out ? v_out->row(ru) : std::span<double>{});
      } catch (const std::exception& e) {
#pragma omp critical(roughdrive_sim_failure)
        {
          if (!failed) failure = e.what();
          failed = true;
        }
      }
    }
  }
  if (failed) throw NumericError(failure);
}

}  // namespace

PathSample simulate_linear(const GridConfig& cfg, const ModelParams& params, std::uint64_t seed,
                           std::size_t n_replicas, const SimOptions& opts) {
  cfg.validate();
  PathSample v(cfg.record_grid(), n_replicas, seed, "v0");
  run_replicas(Mode::linear, cfg, params, nullptr, seed, n_replicas, opts, nullptr, &v);
  return v;
}

PathSample simulate_nonlinear(const GridConfig& cfg, const ModelParams& params, const DriftPair& drift,
                              std::uint64_t seed, std::size_t n_replicas, const SimOptions& opts) {
  cfg.validate();
  PathSample u(cfg.record_grid(), n_replicas, seed, "u0");
  run_replicas(Mode::nonlinear, cfg, params, &drift, seed, n_replicas, opts, &u, nullptr);
  return u;
}

CoupledTrace simulate_coupled(const GridConfig& cfg, const ModelParams& params, const DriftPair& drift,
                              std::uint64_t seed, std::size_t n_replicas, const SimOptions& opts) {
  cfg.validate();
  CoupledTrace tr;
  tr.grid_cfg = cfg;
  tr.seed = seed;
  tr.params = params;
  tr.u0 = PathSample(cfg.record_grid(), n_replicas, seed, "u0");
  tr.v0 = PathSample(cfg.record_grid(), n_replicas, seed, "v0");
  run_replicas(Mode::coupled, cfg, params, &drift, seed, n_replicas, opts, &tr.u0, &tr.v0);
  tr.xi = fields::sample_xi(cfg.record_grid(), params, seed, n_replicas, opts.exec);
  tr.coupled = true;
  return tr;
}

void write_trace_csv(std::ostream& os, const CoupledTrace& trace) {
  os << csv::kVersionLine << '\n';
  os << "replica,t,u0,v0,xi\n";
  const auto& grid = trace.u0.grid;
  for (std::size_t r = 0; r < trace.u0.n_replicas; ++r)
    for (std::size_t j = 0; j < grid.size(); ++j)
      os << r << ',' << csv::format_double(grid[j]) << ',' << csv::format_double(trace.u0.at(r, j)) << ','
         << csv::format_double(trace.v0.at(r, j)) << ',' << csv::format_double(trace.xi.at(r, j)) << '\n';
}

}  // namespace roughdrive::spde
