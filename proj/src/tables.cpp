#include "msenc/tables.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>

#include "msenc/errors.hpp"

namespace msenc {

std::string stage_label(Stage s) {
  switch (s) {
    case Stage::A: return "a";
    case Stage::B: return "b";
    default: return "c";
  }
}

Stage stage_from_label(std::string_view s) {
  if (s == "a" || s == "A") return Stage::A;
  if (s == "b" || s == "B") return Stage::B;
  if (s == "c" || s == "C" || s == "complete") return Stage::Complete;
  throw DataError("unknown stage label: " + std::string(s));
}

// --- PeriodTable -------------------------------------------------------------

PeriodTable::PeriodTable(std::string period, const std::array<std::int64_t, 8>& counts_by_index)
    : period_(std::move(period)), counts_(counts_by_index) {
  if (counts_[0] != 0)
    throw DataError("period " + period_ + ": pattern 000 cannot carry an observed count");
  for (const Pattern& p : kObservedPatterns)
    if (counts_[p.index()] < 0)
      throw DataError("period " + period_ + ": negative count for pattern " + p.str());
}

PeriodTable::PeriodTable(std::string period, const std::map<Pattern, std::int64_t>& counts)
    : period_(std::move(period)) {
  for (const auto& [pat, cnt] : counts) {
    if (pat == Pattern{})
      throw DataError("period " + period_ + ": pattern 000 cannot carry an observed count");
    counts_[pat.index()] = cnt;
  }
  if (counts.size() != kObservedPatterns.size())
    throw DataError("period " + period_ + ": incomplete period, expected all 7 observed patterns");
  for (const Pattern& p : kObservedPatterns)
    if (counts_[p.index()] < 0)
      throw DataError("period " + period_ + ": negative count for pattern " + p.str());
}

std::int64_t PeriodTable::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

// --- AggregatedCounts --------------------------------------------------------

namespace {

const PatternQuery kStageAQuery{Flag::One, Flag::Any, Flag::Any};
const std::array<PatternQuery, 3> kStageBQueries = {
    PatternQuery{Flag::One, Flag::One, Flag::Any},
    PatternQuery{Flag::One, Flag::Zero, Flag::Any},
    PatternQuery{Flag::Zero, Flag::One, Flag::Any}};

}  // namespace

AggregatedCounts::AggregatedCounts(std::string period, Stage stage,
                                   std::vector<AggregateEntry> entries)
    : period_(std::move(period)), stage_(stage), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.count < 0)
      throw DataError("period " + period_ + ": negative count for pattern " + e.pattern.str());
    if (e.pattern.a == Flag::Any || e.pattern.b == Flag::Any || e.pattern.c != Flag::Any)
      throw DataError("period " + period_ + ": aggregated pattern " + e.pattern.str() +
                      " must specify a and b and sum over c");
  }
  auto has = [&](const PatternQuery& q) {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const AggregateEntry& e) { return e.pattern == q; });
  };
  switch (stage_) {
    case Stage::A:
      if (entries_.size() != 1 || !has(kStageAQuery))
        throw DataError("period " + period_ + ": stage a requires the single aggregate 1++");
      break;
    case Stage::B:
      if (entries_.size() != 3 || !has(kStageBQueries[0]) || !has(kStageBQueries[1]) ||
          !has(kStageBQueries[2]))
        throw DataError("period " + period_ + ": stage b requires aggregates 11+, 10+, 01+");
      break;
    default:
      throw DataError("period " + period_ + ": a complete period carries no aggregates");
  }
}

std::int64_t AggregatedCounts::a_total() const {
  for (const auto& e : entries_)
    if (e.pattern == kStageAQuery) return e.count;
  throw DataError("period " + period_ + ": aggregate 1++ not present");
}

std::int64_t AggregatedCounts::ab_total(bool a, bool b) const {
  PatternQuery q{a ? Flag::One : Flag::Zero, b ? Flag::One : Flag::Zero, Flag::Any};
  for (const auto& e : entries_)
    if (e.pattern == q) return e.count;
  throw DataError("period " + period_ + ": aggregate " + q.str() + " not present");
}

std::int64_t AggregatedCounts::total() const {
  std::int64_t sum = 0;
  for (const auto& e : entries_) sum += e.count;
  return sum;
}

// --- StackedTable ------------------------------------------------------------

namespace {

void check_distinct_periods(const std::string& base, const std::string& current) {
  if (base == current)
    throw DataError("stacked table requires two distinct periods, got '" + base + "' twice");
}

}  // namespace

StackedTable::StackedTable(PeriodTable base_table, PeriodTable complete_current)
    : base(std::move(base_table)), current(std::move(complete_current)) {
  check_distinct_periods(base.period(), current_period());
}

StackedTable::StackedTable(PeriodTable base_table, AggregatedCounts partial_current)
    : base(std::move(base_table)), current(std::move(partial_current)) {
  check_distinct_periods(base.period(), current_period());
}

Stage StackedTable::stage() const {
  if (std::holds_alternative<PeriodTable>(current)) return Stage::Complete;
  return std::get<AggregatedCounts>(current).stage();
}

const std::string& StackedTable::current_period() const {
  if (const auto* t = std::get_if<PeriodTable>(&current)) return t->period();
  return std::get<AggregatedCounts>(current).period();
}

// --- CSV ingestion -----------------------------------------------------------

namespace {

struct CsvRow {
  std::string period;
  PatternQuery pattern;
  std::int64_t count = 0;
  int line = 0;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Flag parse_flag(const std::string& s, bool allow_wildcard, int line) {
  if (s == "0") return Flag::Zero;
  if (s == "1") return Flag::One;
  if (s == "+" && allow_wildcard) return Flag::Any;
  throw DataError("line " + std::to_string(line) + ": bad inclusion flag '" + s + "'");
}

std::int64_t parse_count(const std::string& s, int line) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line) + ": malformed count '" + s + "'");
  }
  if (pos != s.size())
    throw DataError("line " + std::to_string(line) + ": malformed count '" + s + "'");
  if (v < 0) throw DataError("line " + std::to_string(line) + ": negative count");
  return v;
}

std::vector<CsvRow> read_counts_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty counts file");
  if (trim(line) != "period,a,b,c,count")
    throw DataError("counts file must start with header 'period,a,b,c,count'");

  std::vector<CsvRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 5)
      throw DataError("line " + std::to_string(lineno) + ": expected 5 fields, got " +
                      std::to_string(fields.size()));
    CsvRow row;
    row.period = trim(fields[0]);
    if (row.period.empty())
      throw DataError("line " + std::to_string(lineno) + ": empty period label");
    row.pattern.a = parse_flag(trim(fields[1]), false, lineno);
    row.pattern.b = parse_flag(trim(fields[2]), false, lineno);
    row.pattern.c = parse_flag(trim(fields[3]), true, lineno);
    row.count = parse_count(trim(fields[4]), lineno);
    row.line = lineno;
    rows.push_back(row);
  }
  return rows;
}

struct PeriodRows {
  std::string period;
  std::vector<CsvRow> complete;
  std::vector<CsvRow> aggregated;
};

std::vector<PeriodRows> group_by_period(const std::vector<CsvRow>& rows) {
  std::vector<PeriodRows> groups;
  for (const auto& row : rows) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const PeriodRows& g) { return g.period == row.period; });
    if (it == groups.end()) {
      groups.push_back(PeriodRows{row.period, {}, {}});
      it = std::prev(groups.end());
    }
    auto& bucket = row.pattern.has_wildcard() ? it->aggregated : it->complete;
    for (const auto& seen : bucket)
      if (seen.pattern == row.pattern)
        throw DataError("line " + std::to_string(row.line) + ": duplicate pattern " +
                        row.pattern.str() + " for period " + row.period);
    bucket.push_back(row);
  }
  return groups;
}

PeriodTable build_period(const PeriodRows& g) {
  std::array<std::int64_t, 8> counts{};
  for (const auto& row : g.complete) {
    Pattern p = row.pattern.as_pattern();
    if (p == Pattern{})
      throw DataError("line " + std::to_string(row.line) +
                      ": pattern 000 cannot carry an observed count");
    counts[p.index()] = row.count;
  }
  if (g.complete.size() != kObservedPatterns.size())
    throw DataError("incomplete base period '" + g.period + "': expected 7 observed patterns, got " +
                    std::to_string(g.complete.size()));
  return PeriodTable(g.period, counts);
}

AggregatedCounts build_aggregated(const PeriodRows& g) {
  Stage stage = g.aggregated.size() == 1 ? Stage::A : Stage::B;
  std::vector<AggregateEntry> entries;
  entries.reserve(g.aggregated.size());
  for (const auto& row : g.aggregated) entries.push_back({row.pattern, row.count});
  return AggregatedCounts(g.period, stage, std::move(entries));
}

}  // namespace

StackedTable parse_counts_csv(std::istream& in) {
  auto groups = group_by_period(read_counts_rows(in));
  if (groups.size() != 2)
    throw DataError("counts file must contain exactly two periods, got " +
                    std::to_string(groups.size()));
  for (const auto& g : groups)
    if (!g.complete.empty() && !g.aggregated.empty())
      throw DataError("period '" + g.period + "' mixes complete and aggregated rows");

  const bool first_aggregated = groups[0].complete.empty();
  const bool second_aggregated = groups[1].complete.empty();
  if (first_aggregated && second_aggregated)
    throw DataError("both periods are aggregated; the base period must be complete");

  // The aggregated period, if any, is the current one; otherwise file order decides.
  const PeriodRows& base_rows = first_aggregated ? groups[1] : groups[0];
  const PeriodRows& current_rows = first_aggregated ? groups[0] : groups[1];
  PeriodTable base = build_period(base_rows);
  if (current_rows.aggregated.empty())
    return StackedTable(std::move(base), build_period(current_rows));
  return StackedTable(std::move(base), build_aggregated(current_rows));
}

PeriodTable parse_period_csv(std::istream& in) {
  auto groups = group_by_period(read_counts_rows(in));
  if (groups.size() != 1)
    throw DataError("expected a single period, got " + std::to_string(groups.size()));
  if (!groups[0].aggregated.empty())
    throw DataError("period '" + groups[0].period + "' contains aggregated rows");
  return build_period(groups[0]);
}

std::variant<PeriodTable, AggregatedCounts> parse_current_csv(std::istream& in) {
  auto groups = group_by_period(read_counts_rows(in));
  if (groups.size() != 1)
    throw DataError("expected a single period, got " + std::to_string(groups.size()));
  const auto& g = groups[0];
  if (!g.complete.empty() && !g.aggregated.empty())
    throw DataError("period '" + g.period + "' mixes complete and aggregated rows");
  if (g.aggregated.empty()) return build_period(g);
  return build_aggregated(g);
}

std::vector<std::pair<int, PeriodTable>> parse_year_tables_csv(std::istream& in) {
  auto groups = group_by_period(read_counts_rows(in));
  std::vector<std::pair<int, PeriodTable>> out;
  for (const auto& g : groups) {
    if (!g.aggregated.empty())
      throw DataError("period '" + g.period + "' contains aggregated rows; year series requires complete periods");
    int year = 0;
    try {
      std::size_t pos = 0;
      year = std::stoi(g.period, &pos);
      if (pos != g.period.size()) throw DataError("");
    } catch (const std::exception&) {
      throw DataError("period label '" + g.period + "' is not an integer year");
    }
    out.emplace_back(year, build_period(g));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].first == out[i - 1].first)
      throw DataError("duplicate year " + std::to_string(out[i].first));
  return out;
}

// --- CSV emission ------------------------------------------------------------

namespace {

void emit_period_rows(std::string& out, const PeriodTable& t) {
  for (const Pattern& p : kObservedPatterns) {
    out += t.period();
    out += ',';
    out += p.a ? '1' : '0';
    out += ',';
    out += p.b ? '1' : '0';
    out += ',';
    out += p.c ? '1' : '0';
    out += ',';
    out += std::to_string(t.count(p));
    out += '\n';
  }
}

void emit_aggregate_rows(std::string& out, const AggregatedCounts& agg) {
  for (const auto& e : agg.entries()) {
    out += agg.period();
    out += ',';
    out += flag_char(e.pattern.a);
    out += ',';
    out += flag_char(e.pattern.b);
    out += ',';
    out += flag_char(e.pattern.c);
    out += ',';
    out += std::to_string(e.count);
    out += '\n';
  }
}

}  // namespace

std::string emit_counts_csv(const StackedTable& stacked) {
  std::string out = "period,a,b,c,count\n";
  emit_period_rows(out, stacked.base);
  if (const auto* t = std::get_if<PeriodTable>(&stacked.current))
    emit_period_rows(out, *t);
  else
    emit_aggregate_rows(out, std::get<AggregatedCounts>(stacked.current));
  return out;
}

std::string emit_period_csv(const PeriodTable& table) {
  std::string out = "period,a,b,c,count\n";
  emit_period_rows(out, table);
  return out;
}

// --- microdata ---------------------------------------------------------------

std::vector<MicroRecord> parse_microdata_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty microdata file");
  if (trim(line) != "unit_id,period,sample")
    throw DataError("microdata file must start with header 'unit_id,period,sample'");
  std::vector<MicroRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 3)
      throw DataError("line " + std::to_string(lineno) + ": expected 3 fields");
    MicroRecord r;
    r.unit = trim(fields[0]);
    r.period = trim(fields[1]);
    std::string sample = trim(fields[2]);
    if (sample != "A" && sample != "B" && sample != "C")
      throw DataError("line " + std::to_string(lineno) + ": unknown sample label '" + sample + "'");
    r.sample = sample[0];
    records.push_back(std::move(r));
  }
  return records;
}

PeriodTable from_microdata(std::span<const MicroRecord> records, std::string period) {
  // Set semantics: repeated (unit, sample) rows collapse to one appearance.
  std::map<std::string, Pattern> by_unit;
  for (const auto& r : records) {
    if (r.sample != 'A' && r.sample != 'B' && r.sample != 'C')
      throw DataError(std::string("unknown sample label '") + r.sample + "'");
    if (period.empty())
      period = r.period;
    else if (!r.period.empty() && r.period != period)
      throw DataError("microdata spans multiple periods ('" + period + "' and '" + r.period +
                      "'); tabulate one period at a time");
    Pattern& p = by_unit[r.unit];
    if (r.sample == 'A') p.a = true;
    if (r.sample == 'B') p.b = true;
    if (r.sample == 'C') p.c = true;
  }
  std::array<std::int64_t, 8> counts{};
  for (const auto& [unit, pat] : by_unit) counts[pat.index()] += 1;
  return PeriodTable(std::move(period), counts);
}

// --- queries -----------------------------------------------------------------

std::int64_t marginal(const PeriodTable& table, PatternQuery query) {
  if (query.covers_unobserved())
    throw DataError("marginal " + query.str() + " includes the unobserved 000 cell");
  std::int64_t sum = 0;
  for (const Pattern& p : kObservedPatterns)
    if (query.matches(p)) sum += table.count(p);
  return sum;
}

// --- validation ----------------------------------------------------------------

bool Diagnostics::ok() const {
  return std::none_of(items.begin(), items.end(),
                      [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string Diagnostics::summary() const {
  std::string out;
  for (const auto& d : items) {
    out += d.severity == Severity::Error ? "error: " : "warning: ";
    out += d.message;
    out += '\n';
  }
  return out;
}

namespace {

void check_period_cells(const PeriodTable& t, Diagnostics& diag) {
  for (const Pattern& p : kObservedPatterns) {
    if (t.count(p) != 0) continue;
    if (p == Pattern{true, true, true})
      diag.items.push_back({Severity::Warning, "period " + t.period() +
                                                   ": zero cell n111: saturated closed form undefined"});
    else
      diag.items.push_back({Severity::Warning, "period " + t.period() + ": zero cell n" + p.str() +
                                                   " may destabilize fitting"});
  }
}

}  // namespace

Diagnostics validate(const StackedTable& stacked) {
  Diagnostics diag;
  if (stacked.base.period() == stacked.current_period())
    diag.items.push_back({Severity::Error, "base and current period share the label '" +
                                               stacked.base.period() + "'"});
  check_period_cells(stacked.base, diag);
  if (const auto* t = std::get_if<PeriodTable>(&stacked.current)) {
    check_period_cells(*t, diag);
  } else {
    const auto& agg = std::get<AggregatedCounts>(stacked.current);
    for (const auto& e : agg.entries())
      if (e.count == 0)
        diag.items.push_back({Severity::Warning, "period " + agg.period() + ": zero aggregate " +
                                                     e.pattern.str() +
                                                     " forces zero completed cells"});
  }
  return diag;
}

// --- transforms ----------------------------------------------------------------

PeriodTable relabel(const PeriodTable& table, std::string_view order) {
  if (order.size() != 3 ||
      std::set<char>(order.begin(), order.end()) != std::set<char>{'a', 'b', 'c'})
    throw DataError("sample order must be a permutation of \"abc\", got '" + std::string(order) +
                    "'");
  auto bit = [](Pattern p, char s) { return s == 'a' ? p.a : s == 'b' ? p.b : p.c; };
  std::array<std::int64_t, 8> counts{};
  for (int i = 1; i < 8; ++i) {
    Pattern old = Pattern::from_index(i);
    Pattern relabeled{bit(old, order[0]), bit(old, order[1]), bit(old, order[2])};
    counts[relabeled.index()] = table.count(old);
  }
  return PeriodTable(table.period(), counts);
}

AggregatedCounts aggregate_period(const PeriodTable& table, Stage stage) {
  switch (stage) {
    case Stage::A:
      return AggregatedCounts(table.period(), Stage::A,
                              {{kStageAQuery, marginal(table, kStageAQuery)}});
    case Stage::B: {
      std::vector<AggregateEntry> entries;
      for (const auto& q : kStageBQueries) entries.push_back({q, marginal(table, q)});
      return AggregatedCounts(table.period(), Stage::B, std::move(entries));
    }
    default:
      throw DataError("a complete period is not an aggregate stage");
  }
}

}  // namespace msenc
