#include "roughdrive/rng.hpp"

#include <cmath>

namespace roughdrive::rng {

std::uint64_t stream_key(std::uint64_t seed, std::string_view ns, std::uint64_t replica,
                         std::uint64_t step) noexcept {
  std::uint64_t state = seed;
  std::uint64_t key = splitmix64(state);
  state = key ^ fnv1a(ns);
  key = splitmix64(state);
  state = key ^ replica;
  key = splitmix64(state);
  state = key ^ step;
  return splitmix64(state);
}

namespace {

constexpr int kLayers = 128;
constexpr double kR = 3.442619855899;
constexpr double kV = 9.91256303526217e-3;

struct ZigguratTables {
  double x[kLayers + 1];
  double ratio[kLayers];

  ZigguratTables() {
    double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

// One ziggurat draw starting from the engine output `bits`.
template <class Engine, class Uniform>
inline double ziggurat(std::uint64_t bits, const ZigguratTables& t, Engine& engine, Uniform uniform) {
  for (;;) {
    const int layer = static_cast<int>(bits & 0x7f);
    // 53 high bits -> u uniform on (-1, 1)
    const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;

    if (std::fabs(u) < t.ratio[layer]) return u * t.x[layer];

    if (layer == 0) {
      // base strip: sample the tail beyond kR
      double xt, yt;
      do {
        xt = std::log(uniform()) / kR;
        yt = std::log(uniform());
      } while (-2.0 * yt < xt * xt);
      return u < 0.0 ? xt - kR : kR - xt;
    }

    const double xs = u * t.x[layer];
    const double f0 = std::exp(-0.5 * (t.x[layer] * t.x[layer] - xs * xs));
    const double f1 = std::exp(-0.5 * (t.x[layer + 1] * t.x[layer + 1] - xs * xs));
    if (f1 + uniform() * (f0 - f1) < 1.0) return xs;
    bits = engine();
  }
}

}  // namespace

double Stream::normal() noexcept {
  return ziggurat(engine_(), tables(), engine_, [this] { return uniform(); });
}

void Stream::fill_normal(std::span<double> out) noexcept {
  const auto& t = tables();
  for (double& x : out) {
    const std::uint64_t bits = engine_();
    const int layer = static_cast<int>(bits & 0x7f);
    const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    x = std::fabs(u) < t.ratio[layer] ? u * t.x[layer]
                                      : ziggurat(bits, t, engine_, [this] { return uniform(); });
  }
}

}  // namespace roughdrive::rng
