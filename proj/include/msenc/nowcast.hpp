#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "msenc/loglinear.hpp"
#include "msenc/tables.hpp"

namespace msenc {

// Two-period stacked model: the base family describes period t0 and carries
// over to t1; the stage adds the identifiable period increments (one shift
// parameter at stage a; shift plus A- and B-increments at stage b).
struct StackedModel {
  Family base_family = Family::Saturated;
  Stage stage = Stage::B;
  ModelSpec spec;
};

StackedModel build_stacked_model(Family base_family, Stage stage);

// Current-period cells disaggregated from the observed aggregates. Each
// aggregate's completed cells sum back to it exactly: the last cell of each
// group carries the complement, so binary rounding lands on the c=0 side.
struct CompletedTable {
  Stage stage = Stage::B;
  std::vector<std::pair<Pattern, double>> completed;

  double value(Pattern p) const;
};

// Halving initialisation: stage b splits each n_{ab+} evenly over c=1/c=0;
// stage a spreads n_{1++} evenly over the four a=1 cells. `split` is the
// share given to the first cell of each group (0.5 resp. 0.25 by default).
CompletedTable initial_completion(const AggregatedCounts& aggregated, double split = -1.0);

// E-step: reallocate each aggregate over its cells in proportion to the
// current fitted values.
CompletedTable e_step(const AggregatedCounts& aggregated, const FitResult& fit);

struct EmOptions {
  double tolerance = 1e-8;  // max absolute change in completed counts
  int max_iterations = 10000;
  double init_split = -1.0;  // default per stage; see initial_completion
  FitOptions fit_options;
};

struct NowcastResult {
  StackedModel model;
  std::string base_period;
  std::string current_period;
  CompletedTable completed;           // final E-step allocation
  FitResult fit;                      // final M-step
  std::array<double, 8> m_nc;         // fitted t1 expectations, all 8 patterns
  double nhat_nc = 0.0;               // sum of m_nc
  int em_iterations = 0;
  std::vector<double> loglik_trace;   // observed-data log-likelihood per M-step
};

// EM over the stacked table. Stage c (current period complete) short-circuits
// to the plain per-period fit of the base family.
NowcastResult em_fit(const StackedTable& stacked, const StackedModel& model,
                     const EmOptions& options = {});

double nowcast_estimate(const NowcastResult& result);

const CompletedTable& completed_counts(const NowcastResult& result);

}  // namespace msenc
