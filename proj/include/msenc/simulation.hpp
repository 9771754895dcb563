#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msenc/rng.hpp"
#include "msenc/tables.hpp"

namespace msenc {

// Log-linear cell parameters of one period (intercept omitted; it cancels in
// the multinomial cell probabilities).
struct MuVector {
  double a = 0.0, b = 0.0, c = 0.0;
  double ab = 0.0, ac = 0.0, bc = 0.0;
};

struct SimConfig {
  std::int64_t n_base = 0;
  std::int64_t n_current = 0;
  MuVector mu_base;
  MuVector mu_current;  // differs from mu_base when drift is configured
  std::uint64_t seed = 0;
  int replications = 100;
  int threads = 1;
};

// p_abc over all 8 patterns, normalized to 1.
std::array<double, 8> cell_probabilities(const MuVector& mu);

// A simulated period: the observed 7-cell table plus the ground truth that
// never reaches the estimators.
struct SimulatedPeriod {
  PeriodTable observed;
  std::int64_t unobserved_000 = 0;
  std::int64_t n_true = 0;
};

SimulatedPeriod simulate_period(const std::string& label, std::int64_t n, const MuVector& mu,
                                Rng& rng);

struct EstimatorStats {
  std::string name;
  double mean_rel_bias = 0.0;
  double rmse_rel = 0.0;
  std::optional<double> ci_coverage;  // saturated TSE only
  int used = 0;
  int failures = 0;
};

struct BiasReport {
  SimConfig config;
  std::vector<EstimatorStats> estimators;  // dse_b, tse, nc_a, nc_b
};

// Replicated two-period study scoring DSE, saturated TSE and the stage-a/b
// nowcasts against the true current-period size.
BiasReport run_bias_study(const SimConfig& config);

}  // namespace msenc
