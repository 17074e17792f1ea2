#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dgnn {

// Deterministic random source. All randomness in the library flows through
// explicitly seeded instances of this class; there is no global generator.
// Doubles are produced from the top 53 bits of mt19937_64 output and integer
// draws use rejection sampling, so sequences are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n), unbiased.
  std::size_t uniform_index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with a sequence of tags (fold index, phase id, ...) into
// an independent stream seed. splitmix64 applied per tag.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

}  // namespace dgnn
