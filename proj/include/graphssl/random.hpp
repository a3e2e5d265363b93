#pragma once

#include <cstdint>
#include <vector>

namespace graphssl {

// Counter-based SplitMix64 stream. The i-th 64-bit output is
// mix(seed + (i + 1) * 0x9E3779B97F4A7C15), so a (seed, counter) pair fully
// determines every draw and streams are reproducible bit-for-bit on any
// platform. Floating-point draws use only integer arithmetic plus IEEE
// basic operations, except normal() which goes through std::log / std::sqrt
// / std::cos.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller; the paired value is cached.
  double normal();

  // Index drawn with probability proportional to weights (nonnegative).
  std::size_t categorical(const std::vector<double>& weights);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Partial Fisher-Yates: `count` distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(SplitMix64& rng,
                                                    std::size_t n,
                                                    std::size_t count);

}  // namespace graphssl
