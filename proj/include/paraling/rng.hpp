#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace paraling {

/// Seedable random source used by every stochastic component.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The seed is first scrambled with splitmix64 together with a
/// stream tag so that equal seeds used for different purposes give unrelated
/// streams. Conversions to doubles and bounded integers are done here rather
/// than through <random> distributions, whose algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

  /// Index drawn from an unnormalized nonnegative weight vector.
  std::size_t categorical(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

namespace stream {
inline constexpr std::uint64_t kInit = 0x696e6974ULL;
inline constexpr std::uint64_t kShuffle = 0x73687566ULL;
inline constexpr std::uint64_t kSampler = 0x73616d70ULL;
}  // namespace stream

}  // namespace paraling
