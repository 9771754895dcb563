#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "msenc/loglinear.hpp"
#include "msenc/tables.hpp"

namespace msenc {

struct CiInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

struct PopulationEstimate {
  std::string period;
  std::string method;  // "dse" or a family label
  std::int64_t n_observed = 0;
  double m_unobserved = 0.0;  // estimated expectation of the 00 / 000 cell
  double nhat = 0.0;          // n_observed + m_unobserved
  std::optional<double> variance;
  std::optional<CiInterval> ci;
  std::optional<FitResult> fit;
};

// Two-sample estimator: m00 = n10*n01/n11. Requires n11 > 0.
PopulationEstimate dse(std::int64_t n11, std::int64_t n10, std::int64_t n01);

// Three-sample estimate under the given family, fitted to the 7 observed
// cells. The saturated family carries an asymptotic variance and CI.
PopulationEstimate tse(const PeriodTable& table, Family family, bool want_variance = true,
                       double level = 0.95, const FitOptions& fit_options = {});

// Same estimator on real-valued cell values (index = Pattern::index(), slot 0
// ignored); used when cell expectations stand in for counts.
PopulationEstimate tse_cells(const std::array<double, 8>& observed_cells, Family family,
                             const FitOptions& fit_options = {});

// Delta-method variance of the saturated estimate: m000^2 * sum(1/n_cell).
double saturated_variance(const PeriodTable& table, double m000);

enum class CiStyle { LogNormal, SymmetricNormal };

// Interval for nhat. The default log-normal form keeps the lower bound above
// the observed n.
CiInterval confidence_interval(const PopulationEstimate& estimate, double variance, double level,
                               CiStyle style = CiStyle::LogNormal);

struct PairDependence {
  double paper_formula = 0.0;  // linear combination of fitted parameters
  double collapsed = 0.0;      // log cross-ratio of the collapsed 2x2 table
};

struct DependenceEstimate {
  PairDependence ab, ac, bc;
};

// Both pairwise-dependence definitions from a converged saturated
// single-period fit. They coincide only in special cases; callers get both.
DependenceEstimate pairwise_dependence(const FitResult& fit);

}  // namespace msenc
