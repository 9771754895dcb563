#include "msenc/rng.hpp"

#include "msenc/errors.hpp"

namespace msenc {

std::int64_t binomial_draw(std::int64_t n, double p, Rng& rng) {
  if (n < 0) throw DataError("binomial draw with negative n");
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < n; ++i)
    if (rng.next_double() < p) ++hits;
  return hits;
}

std::vector<std::int64_t> multinomial_draw(std::int64_t n, std::span<const double> probs,
                                           Rng& rng) {
  std::vector<std::int64_t> counts(probs.size(), 0);
  double remaining_mass = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw DataError("multinomial probability below zero");
    remaining_mass += p;
  }
  if (remaining_mass <= 0.0) throw DataError("multinomial probabilities sum to zero");
  std::int64_t remaining = n;
  for (std::size_t k = 0; k + 1 < probs.size() && remaining > 0; ++k) {
    double cond = probs[k] / remaining_mass;
    counts[k] = binomial_draw(remaining, cond, rng);
    remaining -= counts[k];
    remaining_mass -= probs[k];
  }
  if (!probs.empty()) counts.back() += remaining;
  return counts;
}

}  // namespace msenc
