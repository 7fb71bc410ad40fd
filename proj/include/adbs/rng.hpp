#pragma once

#include <cstdint>
#include <random>

namespace adbs {

// Portable seeded stream. std::mt19937_64 output is fully specified by the
// standard; the distributions below are implemented here (rather than with
// <random> distributions, whose algorithms are implementation-defined) so the
// same seed produces the same draws on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n).
  int uniform_index(int n);

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent sub-stream seed from a parent seed and a stream tag
// (splitmix64 finalizer over the combined value).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);

// Stream tags shared by the environment and the policies.
namespace stream {
inline constexpr std::uint64_t kLatent = 1;
inline constexpr std::uint64_t kObservation = 2;
inline constexpr std::uint64_t kErrorIndex = 3;
inline constexpr std::uint64_t kInit = 10;
inline constexpr std::uint64_t kBranchCoin = 11;
inline constexpr std::uint64_t kPosteriorSample = 12;
inline constexpr std::uint64_t kCalibration = 20;
}  // namespace stream

}  // namespace adbs
