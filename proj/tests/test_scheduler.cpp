#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <filesystem>
#include <numeric>
#include <unordered_set>

#include "currictl/prng.hpp"
#include "currictl/scheduler.hpp"

using namespace currictl;

namespace {

ScoreTable table_of(std::vector<std::tuple<std::string, double, uint64_t>> rows, MetricId m) {
  ScoreTable t;
  t.metrics = {m};
  for (auto& [id, score, tokens] : rows) t.add_row(id, tokens, {{m, score}});
  return t;
}

std::vector<RankedDoc> docs_of(std::vector<uint64_t> tokens) {
  std::vector<RankedDoc> out;
  for (size_t i = 0; i < tokens.size(); ++i)
    out.push_back({"d" + std::to_string(i), static_cast<double>(i), tokens[i]});
  return out;
}

}  // namespace

TEST_CASE("normalize_difficulty sorts ascending with polarity applied") {
  PolarityRegistry reg;
  auto t = table_of({{"d1", 2.0, 1}, {"d2", 1.0, 1}, {"d3", 3.0, 1}}, MetricId::mtld);
  auto order = normalize_difficulty(t, MetricId::mtld, reg);
  REQUIRE(order.size() == 3);
  CHECK(order[0].id == "d2");
  CHECK(order[1].id == "d1");
  CHECK(order[2].id == "d3");

  // FRE is higher-easier: 90 comes before 30
  auto fre = table_of({{"d1", 90.0, 1}, {"d2", 30.0, 1}}, MetricId::flesch_reading_ease);
  auto fre_order = normalize_difficulty(fre, MetricId::flesch_reading_ease, reg);
  CHECK(fre_order[0].id == "d1");
  CHECK(fre_order[1].id == "d2");

  // ties break lexicographically by id
  auto tie = table_of({{"d2", 1.0, 1}, {"d1", 1.0, 1}}, MetricId::mtld);
  auto tie_order = normalize_difficulty(tie, MetricId::mtld, reg);
  CHECK(tie_order[0].id == "d1");
}

TEST_CASE("flipping polarity reverses the order for distinct scores") {
  PolarityRegistry reg;
  auto t = table_of({{"a", 1.0, 1}, {"b", 2.0, 1}, {"c", 3.0, 1}}, MetricId::mtld);
  auto fwd = normalize_difficulty(t, MetricId::mtld, reg);
  reg.set_higher_easier(MetricId::mtld, true);
  auto rev = normalize_difficulty(t, MetricId::mtld, reg);
  REQUIRE(fwd.size() == rev.size());
  for (size_t i = 0; i < fwd.size(); ++i) CHECK(fwd[i].id == rev[rev.size() - 1 - i].id);
}

TEST_CASE("normalize_difficulty rejects an absent metric") {
  PolarityRegistry reg;
  auto t = table_of({{"a", 1.0, 1}}, MetricId::mtld);
  CHECK_THROWS_AS(normalize_difficulty(t, MetricId::ttr, reg), error);
}

TEST_CASE("make_groups pinned examples") {
  auto ten = docs_of(std::vector<uint64_t>(10, 1));
  auto g = make_groups(ten, 2, GroupingMode::equal_docs, MetricId::mtld);
  CHECK(g.groups[0].size() == 5);
  CHECK(g.groups[1].size() == 5);

  auto four = docs_of({4, 4, 4, 4});
  auto gt = make_groups(four, 2, GroupingMode::equal_tokens, MetricId::mtld);
  CHECK(gt.groups[0].size() == 2);
  CHECK(gt.groups[1].size() == 2);

  auto skew = docs_of({5, 1, 1, 1});
  auto gs = make_groups(skew, 2, GroupingMode::equal_tokens, MetricId::mtld);
  CHECK(gs.groups[0].size() == 1);  // 5 >= target 4 closes group 1 immediately
  CHECK(gs.groups[1].size() == 3);

  CHECK_THROWS_AS(make_groups(four, 5, GroupingMode::equal_tokens, MetricId::mtld), error);
}

TEST_CASE("grouping is a partition with bounded token imbalance") {
  Prng rng(321);
  for (int trial = 0; trial < 25; ++trial) {
    size_t count = 5 + rng.uniform_below(200);
    std::vector<uint64_t> tokens;
    uint64_t max_doc = 0;
    for (size_t i = 0; i < count; ++i) {
      tokens.push_back(1 + rng.uniform_below(500));
      max_doc = std::max(max_doc, tokens.back());
    }
    int n = 1 + static_cast<int>(rng.uniform_below(std::min<uint64_t>(count, 12)));
    auto mode = trial % 2 ? GroupingMode::equal_tokens : GroupingMode::equal_docs;
    auto g = make_groups(docs_of(tokens), n, mode, MetricId::mtld);

    size_t total_docs = 0;
    std::unordered_set<std::string> seen;
    for (const auto& grp : g.groups) {
      CHECK_FALSE(grp.empty());
      for (const auto& d : grp) CHECK(seen.insert(d.id).second);
      total_docs += grp.size();
    }
    CHECK(total_docs == count);

    if (mode == GroupingMode::equal_tokens) {
      // first-reach greedy: every boundary lands within one document of its
      // cumulative target, so group totals differ by at most two documents
      auto [lo, hi] =
          std::minmax_element(g.group_token_totals.begin(), g.group_token_totals.end());
      CHECK(*hi - *lo < 2 * max_doc);
    }
    // difficulty-ordered: group boundaries never decrease
    for (size_t i = 0; i + 1 < g.groups.size(); ++i)
      CHECK(g.groups[i].back().difficulty <= g.groups[i + 1].front().difficulty);
  }
}

TEST_CASE("pacing allocation pinned oracles") {
  auto quad = pacing_allocation(PacingKind::quadratic, 3, 29000);
  CHECK(quad.tokens_per_group == std::vector<uint64_t>{4000, 9000, 16000});

  auto inv = pacing_allocation(PacingKind::inverse_quadratic, 3, 14000);
  CHECK(inv.tokens_per_group == std::vector<uint64_t>{9000, 4000, 1000});

  auto lin = pacing_allocation(PacingKind::linear, 10, 10000000000ULL);
  for (uint64_t t : lin.tokens_per_group) CHECK(t == 1000000000ULL);
}

TEST_CASE("allocations sum exactly to T; linear is balanced within 1") {
  Prng rng(654);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_below(100));
    uint64_t t = rng.uniform_below(1000000000ULL);
    auto kind = static_cast<PacingKind>(rng.uniform_below(3));
    auto a = pacing_allocation(kind, n, t);
    CHECK(std::accumulate(a.tokens_per_group.begin(), a.tokens_per_group.end(), uint64_t{0}) ==
          t);
    if (kind == PacingKind::linear) {
      auto [lo, hi] = std::minmax_element(a.tokens_per_group.begin(), a.tokens_per_group.end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("pacing monotonicity") {
  // quadratic is strictly increasing when T is large enough
  auto big = pacing_allocation(PacingKind::quadratic, 8, 10000000);
  for (size_t i = 0; i + 1 < big.tokens_per_group.size(); ++i)
    CHECK(big.tokens_per_group[i] < big.tokens_per_group[i + 1]);

  // inverse-quadratic is strictly decreasing
  auto inv = pacing_allocation(PacingKind::inverse_quadratic, 8, 10000000);
  for (size_t i = 0; i + 1 < inv.tokens_per_group.size(); ++i)
    CHECK(inv.tokens_per_group[i] > inv.tokens_per_group[i + 1]);

  // the inverse weights are the quadratic weights read backwards with a
  // one-step shift: group i gets weight (N-i+1)^2
  auto iq3 = pacing_allocation(PacingKind::inverse_quadratic, 3, 14000);
  CHECK(iq3.tokens_per_group == std::vector<uint64_t>{9000, 4000, 1000});
}

TEST_CASE("interleave allocation") {
  auto cells = interleave_allocation(2, 3, 12);
  REQUIRE(cells.size() == 3);
  for (const auto& a : cells) CHECK(a.tokens_per_group == std::vector<uint64_t>{2, 2});

  auto paper = interleave_allocation(10, 10, 10000000000ULL);
  REQUIRE(paper.size() == 10);
  for (const auto& a : paper)
    for (uint64_t t : a.tokens_per_group) CHECK(t == 100000000ULL);

  auto degenerate = interleave_allocation(1, 1, 12345);
  REQUIRE(degenerate.size() == 1);
  CHECK(degenerate[0].tokens_per_group == std::vector<uint64_t>{12345});
}

TEST_CASE("plan json round-trip, including warmup") {
  CurriculumPlan inner;
  inner.strategy = CurriculumPlan::Strategy::paced;
  inner.metric_id = MetricId::flesch_reading_ease;
  inner.pacing = PacingKind::quadratic;
  inner.group_count = 5;
  inner.seed = 99;
  inner.budget = 1000;
  CurriculumPlan warm = compose_warmup(inner, 1000, 2000);
  warm.validate();

  CurriculumPlan back = CurriculumPlan::from_json(warm.to_json());
  CHECK(back.to_json().dump() == warm.to_json().dump());
  CHECK(back.inner->pacing == PacingKind::quadratic);
  CHECK(back.continuation_budget == 2000);

  auto path = (std::filesystem::temp_directory_path() / "currictl_plan.json").string();
  write_plan(warm, path);
  CHECK(read_plan(path).to_json().dump() == warm.to_json().dump());
}

TEST_CASE("plan validation errors") {
  CurriculumPlan inner;
  inner.budget = 100;
  CurriculumPlan warm = compose_warmup(inner, 100, 200);
  CHECK_THROWS_AS(compose_warmup(warm, 10, 10), error);  // no nesting
  CHECK_THROWS_AS(compose_warmup(inner, 100, 0), error);  // T2 = 0

  CurriculumPlan bad;
  bad.budget = 0;
  CHECK_THROWS_AS(bad.validate(), error);
  bad.budget = 10;
  bad.group_count = 0;
  CHECK_THROWS_AS(bad.validate(), error);
}
