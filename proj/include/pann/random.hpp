#pragma once

#include <cstdint>
#include <random>

namespace pann {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Purpose tags so that independent consumers of one user seed never share
// a stream.
enum class StreamTag : std::uint64_t {
  phase_shift = 1,
  noise = 2,
  mc_sample = 3,
  theta_sample = 4,
  test = 99,
};

// Counter-keyed random stream: sample `index` of purpose `tag` under `seed`
// always sees the same numbers, regardless of how many other samples were
// drawn before it or on which thread.
class Stream {
 public:
  Stream(std::uint64_t seed, StreamTag tag, std::uint64_t index)
      : engine_(splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tag))) ^
                           splitmix64(index + 0x632BE59BD9B4E019ULL))) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double uniform01() { return uniform(0.0, 1.0); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pann
