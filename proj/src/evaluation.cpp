#include "msenc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "msenc/errors.hpp"
#include "msenc/stats.hpp"

namespace msenc {

namespace {

// Relabeling that moves the variant's delayed sample into the C slot.
std::string variant_order(const std::string& variant) {
  if (variant == "ab") return "abc";
  if (variant == "ac") return "acb";
  if (variant == "bc") return "bca";
  throw DataError("unknown sample-order variant '" + variant + "'");
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace

Pattern heldout_singleton(const std::string& variant) {
  if (variant == "ab") return Pattern{false, false, true};   // 001
  if (variant == "ac") return Pattern{false, true, false};   // 010
  if (variant == "bc") return Pattern{true, false, false};   // 100
  throw DataError("unknown sample-order variant '" + variant + "'");
}

const YearRecord* YearSeries::find(int year) const {
  for (const auto& record : years)
    if (record.year == year) return &record;
  return nullptr;
}

YearSeries build_year_series(const std::vector<std::pair<int, PeriodTable>>& years,
                             const SeriesOptions& options) {
  YearSeries series;
  for (const auto& [year, table] : years) {
    YearRecord record{year, table};
    auto est = tse(table, Family::Saturated, /*want_variance=*/true, options.level);
    record.tse_nhat = est.nhat;
    record.tse_variance = est.variance.value_or(0.0);
    if (est.ci) record.tse_ci = *est.ci;
    record.lambda = pairwise_dependence(*est.fit);

    const PeriodTable* previous = nullptr;
    for (const auto& [py, ptable] : years)
      if (py == year - 1) previous = &ptable;

    for (const char* name : kOrderVariants) {
      std::string variant(name);
      std::string order = variant_order(variant);
      PeriodTable relabeled = relabel(table, order);
      auto agg = aggregate_period(relabeled, Stage::B);
      record.dse[variant] =
          dse(agg.ab_total(true, true), agg.ab_total(true, false), agg.ab_total(false, true))
              .nhat;
      if (previous == nullptr) continue;
      StackedTable stacked(relabel(*previous, order), agg);
      NowcastResult nc = em_fit(stacked, build_stacked_model(options.base_family, Stage::B),
                                options.em);
      record.nc[variant] = nc.nhat_nc;

      Pattern cell = heldout_singleton(variant);
      SingletonEntry entry;
      entry.observed = table.count(cell);
      // The held-out singleton always sits at pattern 001 after relabeling.
      entry.nowcast = nc.m_nc[std::size_t(Pattern{false, false, true}.index())];
      entry.lagged = previous->count(cell);
      record.singleton[variant] = entry;
    }
    series.years.push_back(std::move(record));
  }
  std::sort(series.years.begin(), series.years.end(),
            [](const YearRecord& x, const YearRecord& y) { return x.year < y.year; });
  return series;
}

ErrorTable error_table(const YearSeries& series) {
  ErrorTable table;
  for (const auto& record : series.years) {
    const YearRecord* previous = series.find(record.year - 1);
    if (previous == nullptr || record.nc.empty()) continue;
    ErrorRow row;
    row.year = record.year;
    row.lagged_minus_tse = previous->tse_nhat - record.tse_nhat;
    for (const auto& [variant, nhat] : record.nc)
      row.nc_minus_tse[variant] = nhat - record.tse_nhat;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<double> ErrorTable::column(const std::string& name) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (name == "lagged") {
      out.push_back(row.lagged_minus_tse);
    } else {
      auto it = row.nc_minus_tse.find(name);
      if (it == row.nc_minus_tse.end())
        throw DataError("error table has no column '" + name + "'");
      out.push_back(it->second);
    }
  }
  return out;
}

double mae(const std::vector<double>& errors) {
  if (errors.empty()) throw DataError("mae of an empty error list");
  double sum = 0.0;
  for (double e : errors) sum += std::abs(e);
  return sum / double(errors.size());
}

DmResult dm_test(const std::vector<double>& errors1, const std::vector<double>& errors2) {
  if (errors1.size() != errors2.size())
    throw DataError("dm test requires equally long error series");
  const std::size_t T = errors1.size();
  if (T < 3) throw DataError("dm test requires at least 3 observations");
  if (errors1 == errors2) throw DataError("zero loss differential variance");

  std::vector<double> d(T);
  bool all_zero = true;
  for (std::size_t t = 0; t < T; ++t) {
    d[t] = std::abs(errors1[t]) - std::abs(errors2[t]);
    if (d[t] != 0.0) all_zero = false;
  }
  DmResult result;
  if (all_zero) {
    // Equal absolute losses throughout: no accuracy difference.
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  double dbar = mean(d);
  double gamma0 = 0.0;  // lag-0 sample autocovariance
  for (double v : d) gamma0 += (v - dbar) * (v - dbar);
  gamma0 /= double(T);
  if (gamma0 <= 0.0) throw DataError("zero loss differential variance");
  result.statistic = dbar / std::sqrt(gamma0 / double(T));
  result.p_value = 2.0 * (1.0 - normal_cdf(std::abs(result.statistic)));
  return result;
}

SingletonComparison singleton_comparison(const YearSeries& series) {
  SingletonComparison comparison;
  if (series.years.empty()) return comparison;
  int year_min = series.years.front().year;
  int year_max = series.years.back().year;

  std::map<std::string, std::vector<double>> nc_errors, lag_errors;
  for (int year = year_min; year <= year_max; ++year) {
    const YearRecord* record = series.find(year);
    if (record == nullptr) {
      comparison.rows.push_back({year, "", std::nullopt, std::nullopt, std::nullopt});
      continue;
    }
    for (const char* name : kOrderVariants) {
      std::string variant(name);
      Pattern cell = heldout_singleton(variant);
      SingletonRow row;
      row.year = year;
      row.cell = cell.str();
      row.observed = record->table.count(cell);
      auto it = record->singleton.find(variant);
      if (it != record->singleton.end()) {
        row.nowcast = it->second.nowcast;
        row.lagged = it->second.lagged;
        nc_errors[row.cell].push_back(it->second.nowcast - double(*row.observed));
        if (it->second.lagged)
          lag_errors[row.cell].push_back(double(*it->second.lagged) - double(*row.observed));
      }
      comparison.rows.push_back(std::move(row));
    }
  }
  for (const auto& [cell, errors] : nc_errors) comparison.nowcast_mae[cell] = mae(errors);
  for (const auto& [cell, errors] : lag_errors) comparison.lagged_mae[cell] = mae(errors);
  return comparison;
}

std::vector<LambdaRow> lambda_series(const YearSeries& series) {
  std::vector<LambdaRow> rows;
  for (const auto& record : series.years) {
    rows.push_back({record.year, "ab", record.lambda.ab.paper_formula, record.lambda.ab.collapsed});
    rows.push_back({record.year, "ac", record.lambda.ac.paper_formula, record.lambda.ac.collapsed});
    rows.push_back({record.year, "bc", record.lambda.bc.paper_formula, record.lambda.bc.collapsed});
  }
  return rows;
}

std::string emit_estimates_csv(const YearSeries& series) {
  std::string out =
      "year,tse,tse_lower,tse_upper,dse_bc,dse_ac,dse_ab,nc_bc,nc_ac,nc_ab\n";
  if (series.years.empty()) return out;
  int year_min = series.years.front().year;
  int year_max = series.years.back().year;
  for (int year = year_min; year <= year_max; ++year) {
    const YearRecord* record = series.find(year);
    out += std::to_string(year);
    if (record == nullptr) {
      out += ",,,,,,,,,\n";  // explicit gap
      continue;
    }
    out += ',' + fmt(record->tse_nhat);
    out += ',' + fmt(record->tse_ci.lower);
    out += ',' + fmt(record->tse_ci.upper);
    for (const char* variant : kOrderVariants) {
      auto it = record->dse.find(variant);
      out += ',';
      if (it != record->dse.end()) out += fmt(it->second);
    }
    for (const char* variant : kOrderVariants) {
      auto it = record->nc.find(variant);
      out += ',';
      if (it != record->nc.end()) out += fmt(it->second);
    }
    out += '\n';
  }
  return out;
}

std::string emit_singletons_csv(const SingletonComparison& comparison, int year_min,
                                int year_max) {
  (void)year_min;
  (void)year_max;
  std::string out = "year,cell,observed,nowcast,lagged\n";
  for (const auto& row : comparison.rows) {
    out += std::to_string(row.year);
    out += ',' + row.cell;
    out += ',';
    if (row.observed) out += std::to_string(*row.observed);
    out += ',';
    if (row.nowcast) out += fmt(*row.nowcast);
    out += ',';
    if (row.lagged) out += std::to_string(*row.lagged);
    out += '\n';
  }
  return out;
}

std::string emit_lambda_csv(const std::vector<LambdaRow>& rows) {
  std::string out = "year,pair,paper_formula,collapsed\n";
  int previous_year = rows.empty() ? 0 : rows.front().year;
  for (const auto& row : rows) {
    for (int gap = previous_year + 1; gap < row.year; ++gap)
      out += std::to_string(gap) + ",,,\n";
    previous_year = row.year;
    out += std::to_string(row.year);
    out += ',' + row.pair;
    out += ',' + fmt(row.paper_formula);
    out += ',' + fmt(row.collapsed);
    out += '\n';
  }
  return out;
}

}  // namespace msenc
