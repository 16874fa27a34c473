#ifndef NEUROVOLVE_RNG_HPP
#define NEUROVOLVE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace neurovolve {

/// 64-bit FNV-1a over a byte range. Stable across platforms and runs.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  return fnv1a64(b, 8, h);
}

/// SplitMix64 finalizer, used to avalanche hash outputs into seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a68802175563ULL;
  return x ^ (x >> 31);
}

/// Stable seed for the stream belonging to (global_seed, case_id,
/// replicate_index, transform_index). Identical inputs give identical
/// streams on every platform.
inline std::uint64_t derive_stream_seed(std::uint64_t global_seed,
                                        std::string_view case_id,
                                        std::uint64_t replicate_index,
                                        std::uint64_t transform_index) {
  std::uint64_t h = fnv1a64_u64(global_seed, 0xcbf29ce484222325ULL);
  h = fnv1a64(case_id.data(), case_id.size(), h);
  h = fnv1a64_u64(replicate_index, h);
  h = fnv1a64_u64(transform_index, h);
  return splitmix64(h);
}

/// Deterministic random stream. mt19937_64 is bit-exact per the standard;
/// the distributions below are implemented by hand because the standard
/// library distribution objects are not portable across implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(std::uint64_t global_seed, std::string_view case_id,
            std::uint64_t replicate_index, std::uint64_t transform_index)
      : engine_(derive_stream_seed(global_seed, case_id, replicate_index,
                                   transform_index)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; platform-stable.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace neurovolve

#endif  // NEUROVOLVE_RNG_HPP
