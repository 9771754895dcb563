#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msenc/pattern.hpp"

namespace msenc {

// Availability stage of the current period: A = only sample A delivered,
// B = samples A and B delivered, Complete = all three samples delivered.
enum class Stage { A, B, Complete };

std::string stage_label(Stage s);
Stage stage_from_label(std::string_view s);

// Fully observed three-sample contingency table for one period.
// Holds the 7 observable cell counts; 000 is structurally unobserved.
class PeriodTable {
 public:
  PeriodTable(std::string period, const std::map<Pattern, std::int64_t>& counts);
  PeriodTable(std::string period, const std::array<std::int64_t, 8>& counts_by_index);

  const std::string& period() const { return period_; }
  std::int64_t count(Pattern p) const { return counts_[p.index()]; }
  std::int64_t total() const;  // n, the sum of the 7 observed cells

  const std::array<std::int64_t, 8>& counts_by_index() const { return counts_; }

 private:
  std::string period_;
  std::array<std::int64_t, 8> counts_{};  // index = Pattern::index(); slot 0 unused
};

// Partially observed period: counts aggregated over the not-yet-delivered
// sample(s). Stage A carries (1,+,+); stage B carries (1,1,+),(1,0,+),(0,1,+).
struct AggregateEntry {
  PatternQuery pattern;
  std::int64_t count = 0;
};

class AggregatedCounts {
 public:
  AggregatedCounts(std::string period, Stage stage, std::vector<AggregateEntry> entries);

  const std::string& period() const { return period_; }
  Stage stage() const { return stage_; }
  const std::vector<AggregateEntry>& entries() const { return entries_; }

  std::int64_t a_total() const;                  // n_{1++}, stage A
  std::int64_t ab_total(bool a, bool b) const;   // n_{ab+}, stage B
  std::int64_t total() const;                    // sum over entries

 private:
  std::string period_;
  Stage stage_;
  std::vector<AggregateEntry> entries_;
};

// A complete base period stacked with the (possibly partial) current period.
struct StackedTable {
  StackedTable(PeriodTable base_table, PeriodTable complete_current);
  StackedTable(PeriodTable base_table, AggregatedCounts partial_current);

  PeriodTable base;
  std::variant<PeriodTable, AggregatedCounts> current;

  Stage stage() const;
  const std::string& current_period() const;
};

// --- ingestion -------------------------------------------------------------

// Counts CSV, header `period,a,b,c,count`; c may be '+' (aggregated rows).
StackedTable parse_counts_csv(std::istream& in);

// Single complete period in the same CSV schema.
PeriodTable parse_period_csv(std::istream& in);

// Current-period file for nowcasting: either 7 complete rows or the
// wildcard rows of one stage.
std::variant<PeriodTable, AggregatedCounts> parse_current_csv(std::istream& in);

// Multi-year file of complete periods (period label must be an integer year).
std::vector<std::pair<int, PeriodTable>> parse_year_tables_csv(std::istream& in);

std::string emit_counts_csv(const StackedTable& stacked);
std::string emit_period_csv(const PeriodTable& table);

struct MicroRecord {
  std::string unit;
  std::string period;
  char sample = 'A';  // 'A' | 'B' | 'C'
};

std::vector<MicroRecord> parse_microdata_csv(std::istream& in);

// Tabulate unit-level records into a period table. Repeated (unit, sample)
// appearances collapse; records must all belong to one period.
PeriodTable from_microdata(std::span<const MicroRecord> records, std::string period = "");

// --- queries ---------------------------------------------------------------

// Sum of counts over the wildcard positions. Queries that would include the
// unobserved 000 cell are rejected.
std::int64_t marginal(const PeriodTable& table, PatternQuery query);

// --- validation ------------------------------------------------------------

enum class Severity { Warning, Error };

struct Diagnostic {
  Severity severity;
  std::string message;
};

struct Diagnostics {
  std::vector<Diagnostic> items;
  bool ok() const;
  std::string summary() const;
};

// Checks the stacked-table invariants and flags zero cells that destabilize
// fitting. Returns diagnostics, never throws.
Diagnostics validate(const StackedTable& stacked);

// --- transforms ------------------------------------------------------------

// Relabel samples so that the sample named by order[0] becomes A, order[1]
// becomes B and order[2] becomes C ("acb" models B as the delayed sample).
PeriodTable relabel(const PeriodTable& table, std::string_view order);

// Collapse a complete period to the aggregates of an earlier stage.
AggregatedCounts aggregate_period(const PeriodTable& table, Stage stage);

}  // namespace msenc
