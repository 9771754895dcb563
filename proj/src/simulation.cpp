#include "msenc/simulation.hpp"

#include <cmath>
#include <functional>
#include <thread>

#include "msenc/errors.hpp"
#include "msenc/estimators.hpp"
#include "msenc/nowcast.hpp"
#include "msenc/stats.hpp"

namespace msenc {

std::array<double, 8> cell_probabilities(const MuVector& mu) {
  std::array<double, 8> probs{};
  double total = 0.0;
  for (int idx = 0; idx < 8; ++idx) {
    Pattern p = Pattern::from_index(idx);
    double eta = 0.0;
    if (p.a) eta += mu.a;
    if (p.b) eta += mu.b;
    if (p.c) eta += mu.c;
    if (p.a && p.b) eta += mu.ab;
    if (p.a && p.c) eta += mu.ac;
    if (p.b && p.c) eta += mu.bc;
    if (!std::isfinite(eta)) throw DataError("cell probabilities require finite parameters");
    probs[std::size_t(idx)] = std::exp(eta);
    total += probs[std::size_t(idx)];
  }
  for (double& p : probs) p /= total;
  return probs;
}

SimulatedPeriod simulate_period(const std::string& label, std::int64_t n, const MuVector& mu,
                                Rng& rng) {
  auto probs = cell_probabilities(mu);
  auto draw = multinomial_draw(n, probs, rng);
  std::array<std::int64_t, 8> counts{};
  for (int idx = 1; idx < 8; ++idx) counts[std::size_t(idx)] = draw[std::size_t(idx)];
  SimulatedPeriod sim{PeriodTable(label, counts), draw[0], n};
  return sim;
}

namespace {

struct Accumulator {
  std::vector<double> rel_errors;
  int covered = 0;
  int with_ci = 0;
  int failures = 0;

  void add(double nhat, double n_true) {
    rel_errors.push_back((nhat - n_true) / n_true);
  }
};

EstimatorStats finalize(const std::string& name, const Accumulator& acc, bool coverage) {
  EstimatorStats stats;
  stats.name = name;
  stats.used = int(acc.rel_errors.size());
  stats.failures = acc.failures;
  if (!acc.rel_errors.empty()) {
    stats.mean_rel_bias = mean(acc.rel_errors);
    double ss = 0.0;
    for (double e : acc.rel_errors) ss += e * e;
    stats.rmse_rel = std::sqrt(ss / double(acc.rel_errors.size()));
  }
  if (coverage && acc.with_ci > 0)
    stats.ci_coverage = double(acc.covered) / double(acc.with_ci);
  return stats;
}

}  // namespace

BiasReport run_bias_study(const SimConfig& config) {
  if (config.replications < 1) throw DataError("bias study requires at least one replication");
  if (config.n_base < 1 || config.n_current < 1)
    throw DataError("bias study requires positive population sizes");

  const int R = config.replications;
  enum { kDse, kTse, kNcA, kNcB, kEstimators };
  std::vector<std::array<double, kEstimators>> results(
      std::size_t(R), {std::nan(""), std::nan(""), std::nan(""), std::nan("")});
  std::vector<std::array<char, kEstimators>> ok(std::size_t(R), {0, 0, 0, 0});
  std::vector<char> covered(std::size_t(R), 0);
  std::vector<char> has_ci(std::size_t(R), 0);

  auto run_one = [&](int r) {
    Rng rng = Rng::stream(config.seed, std::uint64_t(r));
    SimulatedPeriod base = simulate_period("t0", config.n_base, config.mu_base, rng);
    SimulatedPeriod current = simulate_period("t1", config.n_current, config.mu_current, rng);
    auto& row = results[std::size_t(r)];
    auto& row_ok = ok[std::size_t(r)];

    try {
      auto agg = aggregate_period(current.observed, Stage::B);
      row[kDse] = dse(agg.ab_total(true, true), agg.ab_total(true, false),
                      agg.ab_total(false, true))
                      .nhat;
      row_ok[kDse] = 1;
    } catch (const Error&) {
    }
    try {
      auto est = tse(current.observed, Family::Saturated, /*want_variance=*/true);
      row[kTse] = est.nhat;
      row_ok[kTse] = 1;
      if (est.ci) {
        has_ci[std::size_t(r)] = 1;
        if (est.ci->lower <= double(current.n_true) && double(current.n_true) <= est.ci->upper)
          covered[std::size_t(r)] = 1;
      }
    } catch (const Error&) {
    }
    try {
      StackedTable stacked(base.observed, aggregate_period(current.observed, Stage::A));
      row[kNcA] = em_fit(stacked, build_stacked_model(Family::Saturated, Stage::A)).nhat_nc;
      row_ok[kNcA] = 1;
    } catch (const Error&) {
    }
    try {
      StackedTable stacked(base.observed, aggregate_period(current.observed, Stage::B));
      row[kNcB] = em_fit(stacked, build_stacked_model(Family::Saturated, Stage::B)).nhat_nc;
      row_ok[kNcB] = 1;
    } catch (const Error&) {
    }
  };

  int threads = std::max(1, std::min(config.threads, R));
  if (threads == 1) {
    for (int r = 0; r < R; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int r = t; r < R; r += threads) run_one(r);
      });
    for (auto& th : pool) th.join();
  }

  std::array<Accumulator, kEstimators> acc;
  for (int r = 0; r < R; ++r) {
    for (int e = 0; e < kEstimators; ++e) {
      if (ok[std::size_t(r)][std::size_t(e)])
        acc[std::size_t(e)].add(results[std::size_t(r)][std::size_t(e)],
                                double(config.n_current));
      else
        ++acc[std::size_t(e)].failures;
    }
    if (has_ci[std::size_t(r)]) {
      ++acc[kTse].with_ci;
      if (covered[std::size_t(r)]) ++acc[kTse].covered;
    }
  }

  BiasReport report;
  report.config = config;
  report.estimators.push_back(finalize("dse_b", acc[kDse], false));
  report.estimators.push_back(finalize("tse", acc[kTse], true));
  report.estimators.push_back(finalize("nc_a", acc[kNcA], false));
  report.estimators.push_back(finalize("nc_b", acc[kNcB], false));
  return report;
}

}  // namespace msenc
