#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "msenc/estimators.hpp"
#include "msenc/nowcast.hpp"
#include "msenc/rng.hpp"
#include "msenc/tables.hpp"

namespace msenc {

struct BootstrapConfig {
  int replications = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
};

enum class EstimatorKind { Dse, Tse, Nowcast };

std::string estimator_kind_label(EstimatorKind k);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Tse;
  Family family = Family::Saturated;
  EmOptions em;  // nowcast only
};

struct BootstrapResult {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int requested = 0;
  int used = 0;
  int failed = 0;
  double replicate_mean = 0.0;
  double replicate_sd = 0.0;
  // Percentile intervals can exclude the point estimate; reported, not clipped.
  bool contains_point = true;
  std::string warning;
};

// Percentile bootstrap. Each period is resampled independently: complete
// periods multinomially over their 7 observed cells, aggregated periods over
// their aggregates. Streams are derived per replicate index, so the result
// does not depend on the thread count.
BootstrapResult bootstrap(const StackedTable& data, const EstimatorConfig& estimator,
                          const BootstrapConfig& config);
BootstrapResult bootstrap(const PeriodTable& data, const EstimatorConfig& estimator,
                          const BootstrapConfig& config);

PeriodTable resample_period(const PeriodTable& table, Rng& rng);
AggregatedCounts resample_aggregates(const AggregatedCounts& aggregated, Rng& rng);

}  // namespace msenc
