#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "msenc/errors.hpp"
#include "msenc/tables.hpp"
#include "support/oracles.hpp"

using namespace msenc;

namespace {

PeriodTable make_table(const std::string& period,
                       std::initializer_list<std::pair<const char*, std::int64_t>> cells) {
  std::array<std::int64_t, 8> counts{};
  for (const auto& [pat, cnt] : cells) {
    Pattern p{pat[0] == '1', pat[1] == '1', pat[2] == '1'};
    counts[std::size_t(p.index())] = cnt;
  }
  return PeriodTable(period, counts);
}

const char* kStackedStageB =
    "period,a,b,c,count\n"
    "2017,1,1,1,10\n"
    "2017,1,1,0,20\n"
    "2017,1,0,1,30\n"
    "2017,1,0,0,40\n"
    "2017,0,1,1,50\n"
    "2017,0,1,0,60\n"
    "2017,0,0,1,70\n"
    "2018,1,1,+,25\n"
    "2018,1,0,+,35\n"
    "2018,0,1,+,45\n";

}  // namespace

TEST_CASE("parse: complete base plus stage-b aggregates") {
  std::istringstream in(kStackedStageB);
  StackedTable stacked = parse_counts_csv(in);
  CHECK(stacked.stage() == Stage::B);
  CHECK(stacked.base.period() == "2017");
  CHECK(stacked.current_period() == "2018");
  CHECK(stacked.base.count(Pattern{true, false, false}) == 40);
  const auto& agg = std::get<AggregatedCounts>(stacked.current);
  CHECK(agg.ab_total(true, true) == 25);
  CHECK(agg.ab_total(false, true) == 45);
}

TEST_CASE("parse: two complete periods give stage c") {
  std::string text = "period,a,b,c,count\n";
  for (const char* period : {"2017", "2018"}) {
    for (const Pattern& p : kObservedPatterns)
      text += std::string(period) + "," + (p.a ? "1" : "0") + "," + (p.b ? "1" : "0") + "," +
              (p.c ? "1" : "0") + ",7\n";
  }
  std::istringstream in(text);
  StackedTable stacked = parse_counts_csv(in);
  CHECK(stacked.stage() == Stage::Complete);
  CHECK(stacked.base.period() == "2017");  // first in file order
}

TEST_CASE("parse: errors") {
  auto expect_error = [](const std::string& body, const char* needle) {
    std::istringstream in(body);
    CHECK_THROWS_WITH_AS(parse_counts_csv(in), doctest::Contains(needle), DataError);
  };
  expect_error("period,a,b,c,count\n2017,1,1,1,-3\n", "negative count");
  expect_error("period,a,b,c,count\n2017,1,1,1,10\n2017,1,1,1,4\n", "duplicate pattern");
  expect_error("period,a,b,c\n", "header");
  expect_error("period,a,b,c,count\n2017,1,1,1,zz\n", "malformed count");
  expect_error("period,a,b,c,count\n2017,1,2,1,3\n", "bad inclusion flag");
  expect_error(
      "period,a,b,c,count\n2017,1,1,1,1\n2017,1,1,+,2\n"
      "2017,1,1,0,1\n2017,1,0,1,1\n2017,1,0,0,1\n2017,0,1,1,1\n2017,0,1,0,1\n2017,0,0,1,1\n"
      "2018,1,1,+,2\n2018,1,0,+,2\n2018,0,1,+,2\n",
      "mixes complete and aggregated");

  // three periods
  std::string three = kStackedStageB;
  three += "2019,1,1,+,1\n2019,1,0,+,1\n2019,0,1,+,1\n";
  expect_error(three, "exactly two periods");

  // incomplete base period
  std::string incomplete = "period,a,b,c,count\n2017,1,1,1,5\n2018,1,1,+,2\n2018,1,0,+,2\n2018,0,1,+,2\n";
  expect_error(incomplete, "incomplete base period");

  // pattern 000 is never observed
  expect_error("period,a,b,c,count\n2017,0,0,0,5\n", "000");
}

TEST_CASE("round trip: emit then parse is the identity") {
  Rng rng(2024);
  for (int i = 0; i < 25; ++i) {
    StackedTable original = testing::random_stage_b(rng);
    std::istringstream in(emit_counts_csv(original));
    StackedTable parsed = parse_counts_csv(in);
    for (const Pattern& p : kObservedPatterns)
      CHECK(parsed.base.count(p) == original.base.count(p));
    const auto& agg0 = std::get<AggregatedCounts>(original.current);
    const auto& agg1 = std::get<AggregatedCounts>(parsed.current);
    REQUIRE(agg1.entries().size() == agg0.entries().size());
    for (std::size_t k = 0; k < agg0.entries().size(); ++k) {
      CHECK(agg1.entries()[k].pattern == agg0.entries()[k].pattern);
      CHECK(agg1.entries()[k].count == agg0.entries()[k].count);
    }
  }
  // complete pair round trip
  StackedTable pair(make_table("a0", {{"111", 1}, {"110", 2}, {"101", 3}, {"100", 4}, {"011", 5}, {"010", 6}, {"001", 7}}),
                    make_table("a1", {{"111", 8}, {"110", 9}, {"101", 10}, {"100", 11}, {"011", 12}, {"010", 13}, {"001", 14}}));
  std::istringstream in(emit_counts_csv(pair));
  StackedTable parsed = parse_counts_csv(in);
  CHECK(emit_counts_csv(parsed) == emit_counts_csv(pair));
}

TEST_CASE("microdata tabulation") {
  std::vector<MicroRecord> records = {
      {"u1", "2017", 'A'}, {"u1", "2017", 'B'}, {"u2", "2017", 'A'}, {"u3", "2017", 'C'}};
  PeriodTable t = from_microdata(records);
  CHECK(t.count(Pattern{true, true, false}) == 1);
  CHECK(t.count(Pattern{true, false, false}) == 1);
  CHECK(t.count(Pattern{false, false, true}) == 1);
  CHECK(t.total() == 3);

  // duplicates collapse
  std::vector<MicroRecord> dup = {
      {"u1", "", 'A'}, {"u1", "", 'A'}, {"u1", "", 'B'}};
  PeriodTable t2 = from_microdata(dup, "p");
  CHECK(t2.count(Pattern{true, true, false}) == 1);
  CHECK(t2.total() == 1);

  CHECK(from_microdata({}, "p").total() == 0);

  std::vector<MicroRecord> bad = {{"u1", "p", 'X'}};
  CHECK_THROWS_AS(from_microdata(bad), DataError);

  std::vector<MicroRecord> mixed = {{"u1", "p", 'A'}, {"u2", "q", 'A'}};
  CHECK_THROWS_AS(from_microdata(mixed), DataError);
}

TEST_CASE("microdata: record order does not matter") {
  Rng rng(77);
  std::vector<MicroRecord> records;
  for (int u = 0; u < 200; ++u) {
    for (char s : {'A', 'B', 'C'})
      if (rng.next_double() < 0.4) records.push_back({"u" + std::to_string(u), "p", s});
  }
  PeriodTable forward = from_microdata(records, "p");
  std::reverse(records.begin(), records.end());
  PeriodTable backward = from_microdata(records, "p");
  for (const Pattern& p : kObservedPatterns) CHECK(forward.count(p) == backward.count(p));
}

TEST_CASE("microdata csv") {
  std::istringstream in("unit_id,period,sample\nu1,2017,A\nu1,2017,B\nu2,2017,C\n");
  auto records = parse_microdata_csv(in);
  REQUIRE(records.size() == 3);
  PeriodTable t = from_microdata(records);
  CHECK(t.total() == 2);
}

TEST_CASE("marginal") {
  PeriodTable t = make_table("p", {{"111", 3}, {"110", 2}, {"101", 1}, {"100", 4},
                                   {"011", 5}, {"010", 6}, {"001", 7}});
  CHECK(marginal(t, PatternQuery{Flag::One, Flag::One, Flag::Any}) == 5);
  CHECK(marginal(t, PatternQuery{Flag::One, Flag::Any, Flag::Any}) == 10);  // sample A size
  CHECK(marginal(t, PatternQuery::exact(Pattern{false, false, true})) == 7);
  CHECK_THROWS_WITH_AS(marginal(t, PatternQuery{Flag::Zero, Flag::Zero, Flag::Any}),
                       doctest::Contains("unobserved"), DataError);
  CHECK_THROWS_AS(marginal(t, PatternQuery{Flag::Any, Flag::Any, Flag::Any}), DataError);
}

TEST_CASE("observed cells partition n") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    PeriodTable t = testing::random_table(rng);
    std::int64_t sum = marginal(t, PatternQuery{Flag::One, Flag::Any, Flag::Any}) +
                       marginal(t, PatternQuery{Flag::Zero, Flag::One, Flag::Any}) +
                       t.count(Pattern{false, false, true});
    CHECK(sum == t.total());
  }
}

TEST_CASE("validate") {
  std::istringstream in(kStackedStageB);
  StackedTable good = parse_counts_csv(in);
  CHECK(validate(good).ok());
  CHECK(validate(good).items.empty());

  StackedTable zero_cell(
      make_table("p0", {{"111", 0}, {"110", 2}, {"101", 3}, {"100", 4}, {"011", 5}, {"010", 6}, {"001", 7}}),
      aggregate_period(make_table("p1", {{"111", 1}, {"110", 2}, {"101", 3}, {"100", 4}, {"011", 5}, {"010", 6}, {"001", 7}}),
                       Stage::B));
  Diagnostics diag = validate(zero_cell);
  CHECK(diag.ok());  // warnings only
  REQUIRE(diag.items.size() == 1);
  CHECK(diag.items[0].severity == Severity::Warning);
  CHECK(diag.items[0].message.find("saturated closed form undefined") != std::string::npos);
}

TEST_CASE("relabel permutes sample roles") {
  PeriodTable t = make_table("p", {{"111", 1}, {"110", 2}, {"101", 3}, {"100", 4},
                                   {"011", 5}, {"010", 6}, {"001", 7}});
  PeriodTable r = relabel(t, "acb");  // new B = old c, new C = old b
  CHECK(r.count(Pattern{true, true, false}) == 3);   // 110' <- 101
  CHECK(r.count(Pattern{true, false, true}) == 2);   // 101' <- 110
  CHECK(r.count(Pattern{false, true, false}) == 7);  // 010' <- 001
  CHECK(r.count(Pattern{false, false, true}) == 6);  // 001' <- 010
  CHECK(r.count(Pattern{true, true, true}) == 1);
  CHECK(r.total() == t.total());

  PeriodTable back = relabel(r, "acb");  // the swap is its own inverse
  for (const Pattern& p : kObservedPatterns) CHECK(back.count(p) == t.count(p));

  CHECK_THROWS_AS(relabel(t, "abd"), DataError);
  CHECK_THROWS_AS(relabel(t, "aab"), DataError);
}

TEST_CASE("aggregate_period") {
  PeriodTable t = make_table("p", {{"111", 1}, {"110", 2}, {"101", 3}, {"100", 4},
                                   {"011", 5}, {"010", 6}, {"001", 7}});
  AggregatedCounts a = aggregate_period(t, Stage::A);
  CHECK(a.a_total() == 10);
  AggregatedCounts b = aggregate_period(t, Stage::B);
  CHECK(b.ab_total(true, true) == 3);
  CHECK(b.ab_total(true, false) == 7);
  CHECK(b.ab_total(false, true) == 11);
  CHECK_THROWS_AS(aggregate_period(t, Stage::Complete), DataError);
}

TEST_CASE("stacked table requires distinct periods") {
  PeriodTable t = make_table("p", {{"111", 1}, {"110", 2}, {"101", 3}, {"100", 4},
                                   {"011", 5}, {"010", 6}, {"001", 7}});
  CHECK_THROWS_AS(StackedTable(t, t), DataError);
}
