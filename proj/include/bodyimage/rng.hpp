#pragma once

#include <cstdint>
#include <random>

namespace bodyimage {

/// splitmix64 finalizer; used to derive independent seed streams.
std::uint64_t mix_seed(std::uint64_t value);

/// Seed for item `index` of stream `stream` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index);

/// mt19937_64 with portable real-valued draws (the std distributions are
/// implementation-defined, which would break bit-exact artifacts).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi].
  int between(int lo, int hi);
  /// Standard normal (Box-Muller, no cached spare).
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Stream identifiers for derive_seed.
inline constexpr std::uint64_t kStreamPose = 1;
inline constexpr std::uint64_t kStreamBackground = 2;
inline constexpr std::uint64_t kStreamInit = 3;
inline constexpr std::uint64_t kStreamBatch = 4;
inline constexpr std::uint64_t kStreamProbe = 5;
inline constexpr std::uint64_t kStreamSplit = 6;

}  // namespace bodyimage
