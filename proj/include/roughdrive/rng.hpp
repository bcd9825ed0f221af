#pragma once

// Seeded, splittable random streams.
//
// Every stream is keyed by (seed, namespace, replica, step). Keys are hashed
// with SplitMix64 into the state of a xoshiro256++ engine, so any stream can
// be reconstructed independently of execution order. That is what makes
// replica-parallel and serial runs produce identical numbers.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace roughdrive::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// FNV-1a; used to turn stream namespaces ("field", "xi", ...) into keys.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) noexcept {
    for (auto& w : s_) w = splitmix64(seed);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Derive the 64-bit key of stream (seed, ns, replica, step).
std::uint64_t stream_key(std::uint64_t seed, std::string_view ns, std::uint64_t replica,
                         std::uint64_t step = 0) noexcept;

/// Uniforms and standard normals from one keyed stream.
///
/// Normals use a 128-layer ziggurat (Marsaglia-Tsang layout, Doornik's
/// double-precision variant). Algorithm and tables are fixed, so a stream's
/// output is bit-reproducible for a given toolchain and libm.
class Stream {
 public:
  Stream(std::uint64_t seed, std::string_view ns, std::uint64_t replica, std::uint64_t step = 0)
      : engine_(stream_key(seed, ns, replica, step)) {}

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() noexcept;

  /// Same values as calling normal() out.size() times.
  void fill_normal(std::span<double> out) noexcept;

 private:
  Xoshiro256pp engine_;
};

}  // namespace roughdrive::rng
