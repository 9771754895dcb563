#include "msenc/nowcast.hpp"

#include <algorithm>
#include <cmath>

#include "msenc/errors.hpp"

namespace msenc {

namespace {

const std::array<Pattern, 4> kStageACells = {
    Pattern{true, true, true}, Pattern{true, true, false}, Pattern{true, false, true},
    Pattern{true, false, false}};

// Stage-b groups: per aggregate n_{ab+}, the (c=1, c=0) pair.
const std::array<std::pair<Pattern, Pattern>, 3> kStageBGroups = {{
    {Pattern{true, true, true}, Pattern{true, true, false}},
    {Pattern{true, false, true}, Pattern{true, false, false}},
    {Pattern{false, true, true}, Pattern{false, true, false}},
}};

}  // namespace

StackedModel build_stacked_model(Family base_family, Stage stage) {
  StackedModel model;
  model.base_family = base_family;
  model.stage = stage;
  model.spec = ModelSpec::for_family(base_family);
  switch (stage) {
    case Stage::A:
      model.spec.period_terms = {PeriodTerm::Shift};
      break;
    case Stage::B:
      model.spec.period_terms = {PeriodTerm::Shift, PeriodTerm::AShift, PeriodTerm::BShift};
      break;
    case Stage::Complete:
      break;
  }
  return model;
}

double CompletedTable::value(Pattern p) const {
  for (const auto& [pat, v] : completed)
    if (pat == p) return v;
  throw DataError("pattern " + p.str() + " is not a completed cell");
}

CompletedTable initial_completion(const AggregatedCounts& aggregated, double split) {
  CompletedTable table;
  table.stage = aggregated.stage();
  if (aggregated.stage() == Stage::B) {
    if (split < 0.0) split = 0.5;
    if (!(split > 0.0 && split < 1.0)) throw DataError("init split must be in (0, 1)");
    for (const auto& [c1, c0] : kStageBGroups) {
      double total = double(aggregated.ab_total(c1.a, c1.b));
      double first = total * split;
      table.completed.emplace_back(c1, first);
      table.completed.emplace_back(c0, total - first);
    }
  } else {
    if (split < 0.0) split = 0.25;
    if (!(split > 0.0 && split < 1.0)) throw DataError("init split must be in (0, 1)");
    double total = double(aggregated.a_total());
    double rest = (1.0 - split) / 3.0;
    double allocated = 0.0;
    for (std::size_t i = 0; i < kStageACells.size(); ++i) {
      double v;
      if (i + 1 < kStageACells.size()) {
        v = total * (i == 0 ? split : rest);
        allocated += v;
      } else {
        v = total - allocated;
      }
      table.completed.emplace_back(kStageACells[i], v);
    }
  }
  return table;
}

CompletedTable e_step(const AggregatedCounts& aggregated, const FitResult& fit) {
  CompletedTable table;
  table.stage = aggregated.stage();
  const auto& fitted = fit.fitted_by_period.at(1);
  if (aggregated.stage() == Stage::B) {
    for (const auto& [c1, c0] : kStageBGroups) {
      double total = double(aggregated.ab_total(c1.a, c1.b));
      double m1 = fitted[std::size_t(c1.index())];
      double m0 = fitted[std::size_t(c0.index())];
      double denom = m1 + m0;
      if (!(denom > 0.0))
        throw ModelError("e-step: zero fitted aggregate for group " + c1.str() + "/" + c0.str());
      double first = total * (m1 / denom);
      table.completed.emplace_back(c1, first);
      table.completed.emplace_back(c0, total - first);
    }
  } else {
    double total = double(aggregated.a_total());
    double denom = 0.0;
    for (const Pattern& p : kStageACells) denom += fitted[std::size_t(p.index())];
    if (!(denom > 0.0)) throw ModelError("e-step: zero fitted aggregate for group 1++");
    double allocated = 0.0;
    for (std::size_t i = 0; i < kStageACells.size(); ++i) {
      double v;
      if (i + 1 < kStageACells.size()) {
        v = total * (fitted[std::size_t(kStageACells[i].index())] / denom);
        allocated += v;
      } else {
        v = total - allocated;
      }
      table.completed.emplace_back(kStageACells[i], v);
    }
  }
  return table;
}

namespace {

// Observed-data log-likelihood: Poisson per cell at t0 and Poisson per
// aggregate at t1 (the aggregate of independent Poisson cells is Poisson).
double observed_loglik(const PeriodTable& base, const AggregatedCounts& aggregated,
                       const FitResult& fit) {
  double ll = 0.0;
  const auto& m0 = fit.fitted_by_period.at(0);
  for (const Pattern& p : kObservedPatterns) {
    double y = double(base.count(p));
    double m = m0[std::size_t(p.index())];
    ll += (y > 0.0 ? y * std::log(m) : 0.0) - m - std::lgamma(y + 1.0);
  }
  const auto& m1 = fit.fitted_by_period.at(1);
  auto agg_term = [&](double y, double m) {
    ll += (y > 0.0 ? y * std::log(m) : 0.0) - m - std::lgamma(y + 1.0);
  };
  if (aggregated.stage() == Stage::B) {
    for (const auto& [c1, c0] : kStageBGroups)
      agg_term(double(aggregated.ab_total(c1.a, c1.b)),
               m1[std::size_t(c1.index())] + m1[std::size_t(c0.index())]);
  } else {
    double m = 0.0;
    for (const Pattern& p : kStageACells) m += m1[std::size_t(p.index())];
    agg_term(double(aggregated.a_total()), m);
  }
  return ll;
}

NowcastResult complete_stage_result(const StackedTable& stacked, const StackedModel& model,
                                    const EmOptions& options) {
  // No aggregation: fit the base family to the current period alone, exactly
  // as the per-period estimator does.
  const auto& current = std::get<PeriodTable>(stacked.current);
  std::vector<Cell> cells;
  Eigen::VectorXd counts(7);
  int i = 0;
  for (const Pattern& p : kObservedPatterns) {
    cells.push_back({0, p});
    counts(i++) = double(current.count(p));
  }
  ModelSpec spec = ModelSpec::for_family(model.base_family);
  FitResult fit = fit_poisson(design_matrix(spec, cells), counts, options.fit_options);

  NowcastResult result;
  result.model = model;
  result.base_period = stacked.base.period();
  result.current_period = current.period();
  result.completed.stage = Stage::Complete;
  for (const Pattern& p : kObservedPatterns)
    result.completed.completed.emplace_back(p, double(current.count(p)));
  result.m_nc = fit.fitted_by_period.at(0);
  result.nhat_nc = 0.0;
  for (double m : result.m_nc) result.nhat_nc += m;
  result.loglik_trace.push_back(fit.loglik);
  result.em_iterations = 0;
  result.fit = std::move(fit);
  return result;
}

}  // namespace

NowcastResult em_fit(const StackedTable& stacked, const StackedModel& model,
                     const EmOptions& options) {
  if (stacked.stage() != model.stage)
    throw DataError("stacked table is at stage " + stage_label(stacked.stage()) +
                    " but the model was built for stage " + stage_label(model.stage));
  if (model.stage == Stage::Complete) return complete_stage_result(stacked, model, options);

  const auto& aggregated = std::get<AggregatedCounts>(stacked.current);

  std::vector<Cell> cells;
  Eigen::VectorXd counts;
  CompletedTable completed = initial_completion(aggregated, options.init_split);
  cells.reserve(kObservedPatterns.size() + completed.completed.size());
  for (const Pattern& p : kObservedPatterns) cells.push_back({0, p});
  for (const auto& [p, v] : completed.completed) cells.push_back({1, p});
  counts.resize(Eigen::Index(cells.size()));
  for (std::size_t i = 0; i < kObservedPatterns.size(); ++i)
    counts(Eigen::Index(i)) = double(stacked.base.count(kObservedPatterns[i]));

  DesignMatrix design = design_matrix(model.spec, cells);

  NowcastResult result;
  result.model = model;
  result.base_period = stacked.base.period();
  result.current_period = aggregated.period();

  bool converged = false;
  FitResult fit;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (std::size_t i = 0; i < completed.completed.size(); ++i)
      counts(Eigen::Index(kObservedPatterns.size() + i)) = completed.completed[i].second;
    try {
      fit = fit_poisson(design, counts, options.fit_options);  // M-step
    } catch (const Error& e) {
      throw ConvergenceError("M-step failed at EM iteration " + std::to_string(iter) + ": " +
                             e.what());
    }
    result.loglik_trace.push_back(observed_loglik(stacked.base, aggregated, fit));

    CompletedTable next = e_step(aggregated, fit);
    double delta = 0.0;
    for (std::size_t i = 0; i < next.completed.size(); ++i)
      delta = std::max(delta,
                       std::abs(next.completed[i].second - completed.completed[i].second));
    completed = std::move(next);
    if (delta < options.tolerance) {
      converged = true;
      result.em_iterations = iter + 1;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("EM did not converge in " + std::to_string(options.max_iterations) +
                           " iterations");

  result.completed = std::move(completed);
  result.m_nc = fit.fitted_by_period.at(1);
  result.nhat_nc = 0.0;
  for (double m : result.m_nc) result.nhat_nc += m;
  result.fit = std::move(fit);
  return result;
}

double nowcast_estimate(const NowcastResult& result) { return result.nhat_nc; }

const CompletedTable& completed_counts(const NowcastResult& result) { return result.completed; }

}  // namespace msenc
