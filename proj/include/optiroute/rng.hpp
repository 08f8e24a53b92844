#pragma once
#include <cstdint>
#include <random>
#include <vector>

namespace optiroute {

// Portable seeded RNG. std::mt19937_64 output is fixed by the standard; the
// distributions below are hand-rolled because the std:: ones are not
// reproducible across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
  }

  /// `count` distinct indices from [0, n), ascending. Selection sampling.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count) {
    std::vector<std::size_t> out;
    if (count >= n) {
      out.resize(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = i;
      return out;
    }
    out.reserve(count);
    std::size_t needed = count;
    for (std::size_t i = 0; i < n && needed > 0; ++i) {
      const std::size_t remaining = n - i;
      if (next_below(remaining) < needed) {
        out.push_back(i);
        --needed;
      }
    }
    return out;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace optiroute
