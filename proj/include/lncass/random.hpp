#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lncass {

/// Seeded generator with explicit streams. Each stream is an mt19937_64 whose
/// seed is derived from (seed, stream) through SplitMix64, so chains and folds
/// get independent, reproducible sequences.
///
/// Only the raw 64-bit engine output is used; uniform and normal variates are
/// produced here rather than by <random> distributions, whose algorithms are
/// implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/splitmix64-streams";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Child seed for a numbered sub-task (fold, run) of a seeded job.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace lncass
