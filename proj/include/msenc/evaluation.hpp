#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msenc/estimators.hpp"
#include "msenc/nowcast.hpp"
#include "msenc/tables.hpp"

namespace msenc {

// Sample-order variants by the samples available early: "ab" means C is the
// delayed sample, "ac" means B, "bc" means A.
inline constexpr std::array<const char*, 3> kOrderVariants = {"bc", "ac", "ab"};

// The singleton cell whose count only the delayed sample can observe.
Pattern heldout_singleton(const std::string& variant);

struct SingletonEntry {
  std::int64_t observed = 0;        // n of the singleton cell, once complete
  double nowcast = 0.0;             // EM estimate of that cell
  std::optional<std::int64_t> lagged;  // previous year's observed count
};

struct YearRecord {
  int year = 0;
  PeriodTable table;
  double tse_nhat = 0.0;
  double tse_variance = 0.0;
  CiInterval tse_ci;
  DependenceEstimate lambda;
  // Entries below exist only when the previous year is present.
  std::map<std::string, double> dse;        // variant -> nhat
  std::map<std::string, double> nc;         // variant -> nhat
  std::map<std::string, SingletonEntry> singleton;  // variant -> comparison
};

struct YearSeries {
  std::vector<YearRecord> years;  // ascending; missing years are absent

  const YearRecord* find(int year) const;
};

struct SeriesOptions {
  Family base_family = Family::Saturated;
  double level = 0.95;
  EmOptions em;
};

// Per-year estimates over a multi-year run of complete tables. For each year
// with its predecessor present, the three DSE and nowcast sample-order
// variants are computed by relabeling the delayed sample into the C slot.
YearSeries build_year_series(const std::vector<std::pair<int, PeriodTable>>& years,
                             const SeriesOptions& options = {});

struct ErrorRow {
  int year = 0;
  double lagged_minus_tse = 0.0;
  std::map<std::string, double> nc_minus_tse;  // variant -> difference
};

struct ErrorTable {
  std::vector<ErrorRow> rows;  // years without a previous year are skipped

  std::vector<double> column(const std::string& name) const;  // "lagged" or a variant
};

ErrorTable error_table(const YearSeries& series);

// Mean absolute error. Empty input is an error.
double mae(const std::vector<double>& errors);

struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Diebold-Mariano test with absolute-error loss at horizon 1. Requires equal
// lengths of at least 3. A loss differential with zero variance and nonzero
// mean is degenerate and raises an error.
DmResult dm_test(const std::vector<double>& errors1, const std::vector<double>& errors2);

struct SingletonRow {
  int year = 0;
  std::string cell;  // "100", "010" or "001", in original sample labels
  std::optional<std::int64_t> observed;
  std::optional<double> nowcast;
  std::optional<std::int64_t> lagged;
};

struct SingletonComparison {
  std::vector<SingletonRow> rows;  // year x cell, gap rows for missing years
  std::map<std::string, double> nowcast_mae;  // cell -> MAE of nowcast vs observed
  std::map<std::string, double> lagged_mae;   // cell -> MAE of lagged observation baseline
};

SingletonComparison singleton_comparison(const YearSeries& series);

struct LambdaRow {
  int year = 0;
  std::string pair;  // "ab", "ac", "bc"
  double paper_formula = 0.0;
  double collapsed = 0.0;
};

std::vector<LambdaRow> lambda_series(const YearSeries& series);

// Plot-ready CSV emission (10 significant digits, explicit gap rows).
std::string emit_estimates_csv(const YearSeries& series);
std::string emit_singletons_csv(const SingletonComparison& comparison, int year_min, int year_max);
std::string emit_lambda_csv(const std::vector<LambdaRow>& rows);

}  // namespace msenc
