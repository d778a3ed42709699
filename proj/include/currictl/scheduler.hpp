#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "currictl/errors.hpp"
#include "currictl/metric_id.hpp"
#include "currictl/score_table.hpp"
#include "json.hpp"

namespace currictl {

enum class PacingKind { linear, quadratic, inverse_quadratic };
enum class GroupingMode { equal_tokens, equal_docs };

inline std::string_view pacing_name(PacingKind k) {
  switch (k) {
    case PacingKind::linear: return "linear";
    case PacingKind::quadratic: return "quadratic";
    case PacingKind::inverse_quadratic: return "inverse_quadratic";
  }
  return "linear";
}

inline PacingKind parse_pacing(std::string_view name) {
  if (name == "linear") return PacingKind::linear;
  if (name == "quadratic") return PacingKind::quadratic;
  if (name == "inverse_quadratic") return PacingKind::inverse_quadratic;
  fail(errc::config, "unknown pacing kind: " + std::string(name));
}

struct RankedDoc {
  std::string id;
  double difficulty;  // polarity-normalized: ascending = easy -> hard
  uint64_t tokens;
};

// Stable easy->hard total order; ties broken lexicographically by doc id.
inline std::vector<RankedDoc> normalize_difficulty(const ScoreTable& table, MetricId metric,
                                                   const PolarityRegistry& polarity) {
  std::vector<RankedDoc> out;
  out.reserve(table.doc_order.size());
  for (const auto& id : table.doc_order) {
    const auto& row = table.rows.at(id);
    auto it = row.find(metric);
    if (it == row.end())
      fail(errc::config, "metric " + std::string(metric_name(metric)) + " absent for doc " + id);
    out.push_back({id, polarity.to_difficulty(metric, it->second), table.token_counts.at(id)});
  }
  std::sort(out.begin(), out.end(), [](const RankedDoc& a, const RankedDoc& b) {
    if (a.difficulty != b.difficulty) return a.difficulty < b.difficulty;
    return a.id < b.id;
  });
  return out;
}

struct DifficultyGrouping {
  MetricId metric_id{};
  int group_count = 1;
  GroupingMode mode = GroupingMode::equal_tokens;
  std::vector<double> boundaries;                  // N-1 difficulty cut points
  std::vector<std::vector<RankedDoc>> groups;      // easy -> hard
  std::vector<uint64_t> group_token_totals;
};

// Contiguous cuts of the ascending order. equal_docs cuts at ceil(count/N);
// equal_tokens closes a group once its cumulative token mass reaches
// i * total / N. Each group always receives at least one document.
inline DifficultyGrouping make_groups(const std::vector<RankedDoc>& ordered, int n,
                                      GroupingMode mode, MetricId metric) {
  if (n < 1) fail(errc::config, "group count must be >= 1");
  if (static_cast<size_t>(n) > ordered.size())
    fail(errc::config, "group count " + std::to_string(n) + " exceeds document count " +
                           std::to_string(ordered.size()));
  DifficultyGrouping g;
  g.metric_id = metric;
  g.group_count = n;
  g.mode = mode;
  g.groups.assign(static_cast<size_t>(n), {});
  g.group_token_totals.assign(static_cast<size_t>(n), 0);

  if (mode == GroupingMode::equal_docs) {
    size_t per = (ordered.size() + static_cast<size_t>(n) - 1) / static_cast<size_t>(n);
    for (size_t i = 0; i < ordered.size(); ++i) {
      size_t gi = std::min(i / per, static_cast<size_t>(n) - 1);
      g.groups[gi].push_back(ordered[i]);
      g.group_token_totals[gi] += ordered[i].tokens;
    }
  } else {
    unsigned __int128 total = 0;
    for (const auto& d : ordered) total += d.tokens;
    unsigned __int128 cum = 0;
    size_t gi = 0;
    for (size_t i = 0; i < ordered.size(); ++i) {
      g.groups[gi].push_back(ordered[i]);
      g.group_token_totals[gi] += ordered[i].tokens;
      cum += ordered[i].tokens;
      bool reached_target =
          cum * static_cast<unsigned __int128>(n) >=
          static_cast<unsigned __int128>(gi + 1) * total;
      bool must_close = (ordered.size() - i - 1) == (static_cast<size_t>(n) - gi - 1);
      if (gi + 1 < static_cast<size_t>(n) && (reached_target || must_close)) ++gi;
    }
  }
  for (size_t i = 0; i + 1 < g.groups.size(); ++i)
    g.boundaries.push_back(g.groups[i + 1].front().difficulty);
  return g;
}

struct Allocation {
  std::vector<uint64_t> tokens_per_group;
  uint64_t total = 0;
};

// Largest-remainder apportionment of T over integer weights; ties go to the
// lower index. Sum is exactly T.
inline std::vector<uint64_t> largest_remainder(const std::vector<uint64_t>& weights, uint64_t t) {
  unsigned __int128 den = 0;
  for (uint64_t w : weights) den += w;
  if (den == 0) fail(errc::config, "allocation weights sum to zero");
  size_t n = weights.size();
  std::vector<uint64_t> out(n);
  std::vector<unsigned __int128> rem(n);
  uint64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    unsigned __int128 num = static_cast<unsigned __int128>(t) * weights[i];
    out[i] = static_cast<uint64_t>(num / den);
    rem[i] = num % den;
    assigned += out[i];
  }
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return a < b;
  });
  for (size_t k = 0; assigned < t; ++k, ++assigned) out[idx[k % n]] += 1;
  return out;
}

// Token budget per difficulty group under the chosen pacing. Groups are
// 1-indexed easy -> hard; quadratic weights (i+1)^2 ramp the budget up while
// inverse-quadratic weights (N-i+1)^2 front-load it.
inline Allocation pacing_allocation(PacingKind kind, int n, uint64_t t) {
  if (n < 1) fail(errc::config, "group count must be >= 1");
  std::vector<uint64_t> weights(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    uint64_t w = 1;
    if (kind == PacingKind::quadratic)
      w = static_cast<uint64_t>(i + 1) * static_cast<uint64_t>(i + 1);
    else if (kind == PacingKind::inverse_quadratic)
      w = static_cast<uint64_t>(n - i + 1) * static_cast<uint64_t>(n - i + 1);
    weights[static_cast<size_t>(i - 1)] = w;
  }
  Allocation a;
  a.total = t;
  a.tokens_per_group = largest_remainder(weights, t);
  return a;
}

// Interleave j gets budget T/I, spread linearly over the N groups.
inline std::vector<Allocation> interleave_allocation(int n, int i_count, uint64_t t) {
  if (n < 1 || i_count < 1) fail(errc::config, "N and I must be >= 1");
  std::vector<uint64_t> per_interleave =
      largest_remainder(std::vector<uint64_t>(static_cast<size_t>(i_count), 1), t);
  std::vector<Allocation> out;
  out.reserve(static_cast<size_t>(i_count));
  for (uint64_t budget : per_interleave)
    out.push_back(pacing_allocation(PacingKind::linear, n, budget));
  return out;
}

struct CurriculumPlan {
  enum class Strategy { vanilla, paced, interleaved, shuffled_baseline, warmup };
  Strategy strategy = Strategy::vanilla;
  MetricId metric_id = MetricId::mtld;
  PacingKind pacing = PacingKind::linear;
  int group_count = 10;       // N
  int interleaves = 10;       // I
  GroupingMode grouping = GroupingMode::equal_tokens;
  uint64_t seed = 0;
  uint64_t budget = 0;        // T (phase-1 budget T1 for warmup)
  uint64_t continuation_budget = 0;  // T2, warmup only
  std::shared_ptr<const CurriculumPlan> inner;  // warmup only

  static std::string_view strategy_name(Strategy s) {
    switch (s) {
      case Strategy::vanilla: return "vanilla";
      case Strategy::paced: return "paced";
      case Strategy::interleaved: return "interleaved";
      case Strategy::shuffled_baseline: return "shuffled_baseline";
      case Strategy::warmup: return "warmup";
    }
    return "vanilla";
  }

  static Strategy parse_strategy(std::string_view name) {
    if (name == "vanilla") return Strategy::vanilla;
    if (name == "paced") return Strategy::paced;
    if (name == "interleaved") return Strategy::interleaved;
    if (name == "shuffled_baseline" || name == "shuffled") return Strategy::shuffled_baseline;
    if (name == "warmup") return Strategy::warmup;
    fail(errc::config, "unknown strategy: " + std::string(name));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["strategy"] = std::string(strategy_name(strategy));
    j["metric_id"] = std::string(metric_name(metric_id));
    j["pacing"] = std::string(pacing_name(pacing));
    j["N"] = group_count;
    j["I"] = interleaves;
    j["grouping"] = grouping == GroupingMode::equal_tokens ? "equal_tokens" : "equal_docs";
    j["seed"] = seed;
    if (strategy == Strategy::warmup) {
      j["T1"] = budget;
      j["T2"] = continuation_budget;
      j["inner"] = inner->to_json();
    } else {
      j["T"] = budget;
    }
    return j;
  }

  static CurriculumPlan from_json(const nlohmann::json& j) {
    CurriculumPlan p;
    p.strategy = parse_strategy(j.at("strategy").get<std::string>());
    p.metric_id = parse_metric(j.at("metric_id").get<std::string>());
    p.pacing = parse_pacing(j.at("pacing").get<std::string>());
    p.group_count = j.at("N").get<int>();
    p.interleaves = j.at("I").get<int>();
    p.grouping = j.at("grouping").get<std::string>() == "equal_docs" ? GroupingMode::equal_docs
                                                                     : GroupingMode::equal_tokens;
    p.seed = j.at("seed").get<uint64_t>();
    if (p.strategy == Strategy::warmup) {
      p.budget = j.at("T1").get<uint64_t>();
      p.continuation_budget = j.at("T2").get<uint64_t>();
      auto inner = std::make_shared<CurriculumPlan>(from_json(j.at("inner")));
      if (inner->strategy == Strategy::warmup) fail(errc::config, "warmup plans cannot nest");
      p.inner = inner;
    } else {
      p.budget = j.at("T").get<uint64_t>();
    }
    p.validate();
    return p;
  }

  void validate() const {
    if (group_count < 1 || interleaves < 1) fail(errc::config, "N and I must be >= 1");
    if (budget == 0) fail(errc::config, "token budget must be > 0");
    if (strategy == Strategy::warmup) {
      if (!inner) fail(errc::config, "warmup plan requires an inner plan");
      if (inner->strategy == Strategy::warmup) fail(errc::config, "warmup plans cannot nest");
      if (continuation_budget == 0) fail(errc::config, "warmup continuation budget must be > 0");
    }
  }
};

// Two-phase plan: curriculum-ordered warmup, then conventional shuffled
// training on documents disjoint from phase 1.
inline CurriculumPlan compose_warmup(const CurriculumPlan& inner, uint64_t t1, uint64_t t2) {
  if (inner.strategy == CurriculumPlan::Strategy::warmup)
    fail(errc::config, "warmup plans cannot nest");
  if (t1 == 0 || t2 == 0) fail(errc::config, "warmup budgets must be > 0");
  CurriculumPlan p;
  p.strategy = CurriculumPlan::Strategy::warmup;
  p.metric_id = inner.metric_id;
  p.pacing = inner.pacing;
  p.group_count = inner.group_count;
  p.interleaves = inner.interleaves;
  p.grouping = inner.grouping;
  p.seed = inner.seed;
  p.budget = t1;
  p.continuation_budget = t2;
  auto inner_copy = std::make_shared<CurriculumPlan>(inner);
  inner_copy->budget = t1;
  p.inner = inner_copy;
  return p;
}

inline void write_plan(const CurriculumPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io, "cannot write plan: " + path);
  out << plan.to_json().dump(2) << "\n";
}

inline CurriculumPlan read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot read plan: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(errc::data, "plan file is not valid JSON: " + path + ": " + e.what());
  }
  return CurriculumPlan::from_json(j);
}

}  // namespace currictl
