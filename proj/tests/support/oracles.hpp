#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "msenc/rng.hpp"
#include "msenc/tables.hpp"

namespace msenc::testing {

// Uniform integer in [lo, hi], from the deterministic stream.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Random positive 7-cell table.
PeriodTable random_table(Rng& rng, const std::string& period = "t0", std::int64_t lo = 5,
                         std::int64_t hi = 2000);

// Random stage-b instance: positive base table plus positive aggregates.
StackedTable random_stage_b(Rng& rng);

// Random stage-a instance.
StackedTable random_stage_a(Rng& rng);

// Closed-form saturated extrapolation of the 000 cell.
double saturated_m000_closed_form(const PeriodTable& table);

// Ratio-adjusted DSE closed form for the stage-b nowcast under a saturated
// base model. Returns nhat.
double ratio_adjusted_dse_nhat(const StackedTable& stage_b);

// Nelder-Mead minimization; deterministic, with restarts. Returns the best
// point found.
struct NelderMeadOptions {
  int max_evaluations = 60000;
  double f_tolerance = 1e-13;
  double x_tolerance = 1e-10;
  int restarts = 6;
  double initial_step = 0.25;
};

std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, const NelderMeadOptions& options = {});

// Direct maximization of the stage-b observed-data likelihood for a
// saturated base model (10 free parameters). Returns nhat for the current
// period. Independent of the EM implementation.
double brute_force_stage_b_nhat(const StackedTable& stage_b);

// Direct ML fit of a single-period family by derivative-free maximization of
// the 7-cell Poisson likelihood; returns all 8 fitted cells.
std::array<double, 8> brute_force_single_period(const PeriodTable& table,
                                                const std::vector<int>& term_indices);

}  // namespace msenc::testing
