#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace msenc {

// splitmix64 step; used to whiten seeds and derive per-task streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random stream. mt19937_64 output is fixed by the standard,
// and all distribution logic here is hand-rolled, so results are identical
// across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(whiten(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() { return double(gen_() >> 11) * 0x1.0p-53; }

  // Independent stream for subtask `index` of a run seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x517cc1b727220a95ULL * (index + 1));
    return Rng(splitmix64(s));
  }

 private:
  static std::uint64_t whiten(std::uint64_t seed) {
    std::uint64_t s = seed;
    return splitmix64(s);
  }
  std::mt19937_64 gen_;
};

// Binomial(n, p) by counting uniform draws below p. Exact and platform-stable.
std::int64_t binomial_draw(std::int64_t n, double p, Rng& rng);

// Multinomial draw by sequential binomial decomposition.
std::vector<std::int64_t> multinomial_draw(std::int64_t n, std::span<const double> probs,
                                           Rng& rng);

}  // namespace msenc
