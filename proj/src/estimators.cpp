#include "msenc/estimators.hpp"

#include <cmath>

#include "msenc/errors.hpp"
#include "msenc/stats.hpp"

namespace msenc {

PopulationEstimate dse(std::int64_t n11, std::int64_t n10, std::int64_t n01) {
  if (n11 <= 0) throw DataError("dse undefined: n11 = 0");
  if (n10 < 0 || n01 < 0) throw DataError("dse requires nonnegative counts");
  PopulationEstimate est;
  est.method = "dse";
  est.n_observed = n11 + n10 + n01;
  est.m_unobserved = double(n10) * double(n01) / double(n11);
  est.nhat = double(est.n_observed) + est.m_unobserved;
  return est;
}

namespace {

PopulationEstimate tse_fit(const std::array<double, 8>& cells, Family family,
                           const FitOptions& fit_options) {
  std::vector<Cell> fit_cells;
  Eigen::VectorXd counts(7);
  int i = 0;
  for (const Pattern& p : kObservedPatterns) {
    fit_cells.push_back({0, p});
    counts(i++) = cells[std::size_t(p.index())];
  }
  ModelSpec spec = ModelSpec::for_family(family);
  FitResult fit = fit_poisson(design_matrix(spec, fit_cells), counts, fit_options);

  PopulationEstimate est;
  est.method = family_label(family);
  double n = 0.0;
  for (const Pattern& p : kObservedPatterns) n += cells[std::size_t(p.index())];
  est.n_observed = std::llround(n);
  est.m_unobserved = fit.fitted(0, Pattern{});
  est.nhat = n + est.m_unobserved;
  est.fit = std::move(fit);
  return est;
}

}  // namespace

PopulationEstimate tse_cells(const std::array<double, 8>& observed_cells, Family family,
                             const FitOptions& fit_options) {
  return tse_fit(observed_cells, family, fit_options);
}

PopulationEstimate tse(const PeriodTable& table, Family family, bool want_variance, double level,
                       const FitOptions& fit_options) {
  std::array<double, 8> cells{};
  for (const Pattern& p : kObservedPatterns)
    cells[std::size_t(p.index())] = double(table.count(p));
  PopulationEstimate est = tse_fit(cells, family, fit_options);
  est.period = table.period();
  est.n_observed = table.total();
  est.nhat = double(est.n_observed) + est.m_unobserved;
  if (want_variance && family == Family::Saturated) {
    // A successful saturated fit implies all 7 cells are positive.
    est.variance = saturated_variance(table, est.m_unobserved);
    est.ci = confidence_interval(est, *est.variance, level);
  }
  return est;
}

double saturated_variance(const PeriodTable& table, double m000) {
  double inv_sum = 0.0;
  for (const Pattern& p : kObservedPatterns) {
    std::int64_t n = table.count(p);
    if (n <= 0)
      throw DataError("saturated variance undefined: zero cell n" + p.str());
    inv_sum += 1.0 / double(n);
  }
  return m000 * m000 * inv_sum;
}

CiInterval confidence_interval(const PopulationEstimate& estimate, double variance, double level,
                               CiStyle style) {
  if (variance < 0.0) throw DataError("negative variance");
  if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must be in (0, 1)");
  CiInterval ci;
  ci.level = level;
  if (variance == 0.0) {
    ci.lower = ci.upper = estimate.nhat;
    return ci;
  }
  double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  double sd = std::sqrt(variance);
  if (style == CiStyle::SymmetricNormal) {
    ci.lower = estimate.nhat - z * sd;
    ci.upper = estimate.nhat + z * sd;
    return ci;
  }
  double n = double(estimate.n_observed);
  double ratio = z * sd / estimate.m_unobserved;
  ci.lower = n + estimate.m_unobserved * std::exp(-ratio);
  ci.upper = n + estimate.m_unobserved * std::exp(ratio);
  return ci;
}

namespace {

double collapsed_log_cross_ratio(const std::array<double, 8>& m, char collapse_over) {
  // 2x2 table of the two kept samples, summed over the collapsed one; the
  // (0,0) cell includes the extrapolated 000 expectation.
  auto cell = [&](bool x, bool y) {
    double sum = 0.0;
    for (int idx = 0; idx < 8; ++idx) {
      Pattern p = Pattern::from_index(idx);
      bool keep1, keep2;
      switch (collapse_over) {
        case 'c': keep1 = p.a; keep2 = p.b; break;
        case 'b': keep1 = p.a; keep2 = p.c; break;
        default: keep1 = p.b; keep2 = p.c; break;
      }
      if (keep1 == x && keep2 == y) sum += m[std::size_t(idx)];
    }
    return sum;
  };
  return std::log(cell(true, true) * cell(false, false) /
                  (cell(true, false) * cell(false, true)));
}

}  // namespace

DependenceEstimate pairwise_dependence(const FitResult& fit) {
  if (fit.spec.family != Family::Saturated || !fit.spec.period_terms.empty())
    throw ModelError("pairwise dependence requires a saturated single-period fit");
  if (!fit.converged) throw ModelError("pairwise dependence requires a converged fit");

  const double mu_a = fit.param("A");
  const double mu_b = fit.param("B");
  const double mu_c = fit.param("C");
  const double mu_ab = fit.param("AB");
  const double mu_ac = fit.param("AC");
  const double mu_bc = fit.param("BC");

  int period = fit.cells.front().period;
  const std::array<double, 8>& m = fit.fitted_by_period.at(period);

  DependenceEstimate est;
  est.ab.paper_formula = mu_c + mu_ab + mu_ac + mu_bc;
  est.ac.paper_formula = mu_b + mu_ac + mu_ab + mu_bc;
  est.bc.paper_formula = mu_a + mu_bc + mu_ab + mu_ac;
  est.ab.collapsed = collapsed_log_cross_ratio(m, 'c');
  est.ac.collapsed = collapsed_log_cross_ratio(m, 'b');
  est.bc.collapsed = collapsed_log_cross_ratio(m, 'a');
  return est;
}

}  // namespace msenc
