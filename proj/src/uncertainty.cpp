#include "msenc/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "msenc/errors.hpp"
#include "msenc/stats.hpp"

namespace msenc {

std::string estimator_kind_label(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Dse: return "dse";
    case EstimatorKind::Tse: return "tse";
    default: return "nowcast";
  }
}

PeriodTable resample_period(const PeriodTable& table, Rng& rng) {
  std::array<double, 7> probs{};
  std::int64_t n = table.total();
  if (n == 0) return table;
  for (std::size_t i = 0; i < kObservedPatterns.size(); ++i)
    probs[i] = double(table.count(kObservedPatterns[i])) / double(n);
  auto draw = multinomial_draw(n, probs, rng);
  std::array<std::int64_t, 8> counts{};
  for (std::size_t i = 0; i < kObservedPatterns.size(); ++i)
    counts[std::size_t(kObservedPatterns[i].index())] = draw[i];
  return PeriodTable(table.period(), counts);
}

AggregatedCounts resample_aggregates(const AggregatedCounts& aggregated, Rng& rng) {
  std::int64_t n = aggregated.total();
  const auto& entries = aggregated.entries();
  if (n == 0 || entries.size() == 1) return aggregated;
  std::vector<double> probs;
  probs.reserve(entries.size());
  for (const auto& e : entries) probs.push_back(double(e.count) / double(n));
  auto draw = multinomial_draw(n, probs, rng);
  std::vector<AggregateEntry> resampled;
  resampled.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    resampled.push_back({entries[i].pattern, draw[i]});
  return AggregatedCounts(aggregated.period(), aggregated.stage(), std::move(resampled));
}

namespace {

// Run fn(r) for r in [0, n) on `threads` workers; work is indexed, so the
// schedule cannot affect results.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int r = 0; r < n; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int r = t; r < n; r += threads) fn(r);
    });
  }
  for (auto& th : pool) th.join();
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of an empty replicate set");
  if (sorted.size() == 1) return sorted.front();
  double pos = q * double(sorted.size() - 1);
  std::size_t lo = std::size_t(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double w = pos - double(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

BootstrapResult run_bootstrap(double point, const BootstrapConfig& config,
                              const std::function<double(Rng&)>& replicate) {
  if (config.replications < 2) throw DataError("bootstrap requires at least 2 replications");
  if (!(config.level > 0.0 && config.level < 1.0))
    throw DataError("confidence level must be in (0, 1)");

  const int B = config.replications;
  std::vector<double> estimates(std::size_t(B), std::nan(""));
  std::vector<char> ok(std::size_t(B), 0);
  parallel_for(B, config.threads, [&](int r) {
    Rng rng = Rng::stream(config.seed, std::uint64_t(r));
    try {
      estimates[std::size_t(r)] = replicate(rng);
      ok[std::size_t(r)] = 1;
    } catch (const Error&) {
      // failed replicate: recorded and excluded
    }
  });

  std::vector<double> kept;
  kept.reserve(std::size_t(B));
  for (int r = 0; r < B; ++r)
    if (ok[std::size_t(r)]) kept.push_back(estimates[std::size_t(r)]);

  BootstrapResult result;
  result.point = point;
  result.level = config.level;
  result.requested = B;
  result.used = int(kept.size());
  result.failed = B - result.used;
  if (result.failed * 10 > B)
    throw DataError("bootstrap interval refused: " + std::to_string(result.failed) + " of " +
                    std::to_string(B) + " replicates failed (> 10%)");

  std::sort(kept.begin(), kept.end());
  double alpha = (1.0 - config.level) / 2.0;
  result.lower = percentile(kept, alpha);
  result.upper = percentile(kept, 1.0 - alpha);
  result.replicate_mean = mean(kept);
  result.replicate_sd = kept.size() > 1 ? sample_sd(kept) : 0.0;

  if (point >= kept.front() && point <= kept.back() &&
      !(result.lower <= point && point <= result.upper)) {
    result.contains_point = false;
    result.warning = "percentile interval excludes the point estimate";
  }
  return result;
}

double estimate_stacked(const StackedTable& data, const EstimatorConfig& estimator) {
  switch (estimator.kind) {
    case EstimatorKind::Nowcast: {
      StackedModel model = build_stacked_model(estimator.family, data.stage());
      return em_fit(data, model, estimator.em).nhat_nc;
    }
    case EstimatorKind::Dse: {
      if (data.stage() != Stage::B)
        throw DataError("dse over a stacked table requires stage b aggregates");
      const auto& agg = std::get<AggregatedCounts>(data.current);
      return dse(agg.ab_total(true, true), agg.ab_total(true, false), agg.ab_total(false, true))
          .nhat;
    }
    default:
      throw DataError("tse over a stacked table is ambiguous; bootstrap a single period");
  }
}

double estimate_period(const PeriodTable& data, const EstimatorConfig& estimator) {
  switch (estimator.kind) {
    case EstimatorKind::Tse:
      return tse(data, estimator.family, /*want_variance=*/false).nhat;
    case EstimatorKind::Dse: {
      auto n11 = marginal(data, PatternQuery{Flag::One, Flag::One, Flag::Any});
      auto n10 = marginal(data, PatternQuery{Flag::One, Flag::Zero, Flag::Any});
      auto n01 = marginal(data, PatternQuery{Flag::Zero, Flag::One, Flag::Any});
      return dse(n11, n10, n01).nhat;
    }
    default:
      throw DataError("nowcast bootstrap requires a stacked table");
  }
}

}  // namespace

BootstrapResult bootstrap(const StackedTable& data, const EstimatorConfig& estimator,
                          const BootstrapConfig& config) {
  double point = estimate_stacked(data, estimator);
  return run_bootstrap(point, config, [&](Rng& rng) {
    PeriodTable base = resample_period(data.base, rng);
    if (const auto* complete = std::get_if<PeriodTable>(&data.current)) {
      StackedTable replicate(std::move(base), resample_period(*complete, rng));
      return estimate_stacked(replicate, estimator);
    }
    StackedTable replicate(std::move(base),
                           resample_aggregates(std::get<AggregatedCounts>(data.current), rng));
    return estimate_stacked(replicate, estimator);
  });
}

BootstrapResult bootstrap(const PeriodTable& data, const EstimatorConfig& estimator,
                          const BootstrapConfig& config) {
  double point = estimate_period(data, estimator);
  return run_bootstrap(point, config, [&](Rng& rng) {
    PeriodTable replicate = resample_period(data, rng);
    return estimate_period(replicate, estimator);
  });
}

}  // namespace msenc
