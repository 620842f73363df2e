#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fgcl {

// Seeded random stream. Every consumer in the simulator owns one; streams
// for distinct purposes are derived from the global seed by name so that
// adding draws in one place never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream keyed by (seed, name, a, b).
  static Rng substream(std::uint64_t seed, std::string_view name,
                       std::uint64_t a = 0, std::uint64_t b = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  // Child stream seeded from this one; advances this stream by one draw.
  Rng fork();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name,
                       std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace fgcl
