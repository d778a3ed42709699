#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "currictl/corpus.hpp"
#include "currictl/errors.hpp"
#include "currictl/hash.hpp"
#include "currictl/prng.hpp"
#include "currictl/scheduler.hpp"
#include "json.hpp"

namespace currictl {

struct PhaseCell {
  int phase = 0;       // warmup phase (0/1), otherwise 0
  int interleave = 0;  // 0-based interleave index
  int group = 0;       // 0-based difficulty group
  uint64_t start_tokens = 0;
  uint64_t tokens = 0;
  size_t start_index = 0;  // offset into sequence
  size_t doc_count = 0;
};

struct OrderManifest {
  CurriculumPlan plan;
  std::vector<std::string> sequence;  // doc ids, training order
  std::vector<uint64_t> phase_marks;  // token offsets where phases/groups begin
  std::vector<PhaseCell> cells;
  uint64_t total_tokens = 0;
  uint64_t seed = 0;
  std::string order_hash;
  std::string ablation_of;  // source order_hash for prefix-shuffle ablations

  void finish() {
    Sha256 h;
    for (size_t i = 0; i < sequence.size(); ++i) {
      if (i) h.update("\n");
      h.update(sequence[i]);
    }
    order_hash = h.hex();
    phase_marks.clear();
    uint64_t last = UINT64_MAX;
    for (const auto& c : cells) {
      if (c.doc_count == 0) continue;
      if (c.start_tokens != last) phase_marks.push_back(c.start_tokens);
      last = c.start_tokens;
    }
    if (phase_marks.empty()) phase_marks.push_back(0);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["plan"] = plan.to_json();
    j["sequence"] = sequence;
    j["phase_marks"] = phase_marks;
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells) {
      nlohmann::json cj;
      cj["phase"] = c.phase;
      cj["interleave"] = c.interleave;
      cj["group"] = c.group;
      cj["start_tokens"] = c.start_tokens;
      cj["tokens"] = c.tokens;
      cj["start_index"] = c.start_index;
      cj["doc_count"] = c.doc_count;
      cells_json.push_back(cj);
    }
    j["cells"] = cells_json;
    j["total_tokens"] = total_tokens;
    j["seed"] = seed;
    j["order_hash"] = order_hash;
    if (!ablation_of.empty()) j["ablation_of"] = ablation_of;
    return j;
  }

  static OrderManifest from_json(const nlohmann::json& j) {
    OrderManifest m;
    m.plan = CurriculumPlan::from_json(j.at("plan"));
    m.sequence = j.at("sequence").get<std::vector<std::string>>();
    m.phase_marks = j.at("phase_marks").get<std::vector<uint64_t>>();
    for (const auto& cj : j.at("cells")) {
      PhaseCell c;
      c.phase = cj.at("phase").get<int>();
      c.interleave = cj.at("interleave").get<int>();
      c.group = cj.at("group").get<int>();
      c.start_tokens = cj.at("start_tokens").get<uint64_t>();
      c.tokens = cj.at("tokens").get<uint64_t>();
      c.start_index = cj.at("start_index").get<size_t>();
      c.doc_count = cj.at("doc_count").get<size_t>();
      m.cells.push_back(c);
    }
    m.total_tokens = j.at("total_tokens").get<uint64_t>();
    m.seed = j.at("seed").get<uint64_t>();
    m.order_hash = j.at("order_hash").get<std::string>();
    if (j.contains("ablation_of")) m.ablation_of = j.at("ablation_of").get<std::string>();
    return m;
  }
};

inline void write_manifest(const OrderManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io, "cannot write order manifest: " + path);
  out << m.to_json().dump(2) << "\n";
}

inline OrderManifest read_order_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot read order manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(errc::data, "order manifest is not valid JSON: " + path + ": " + e.what());
  }
  return OrderManifest::from_json(j);
}

// Seed for the shuffled continuation phase of a warmup plan; exposed so the
// phase-2 order can be reproduced independently.
inline uint64_t warmup_phase2_seed(uint64_t seed) { return derive_seed(seed, "warmup-phase2"); }

namespace detail {

// Draws uniformly without replacement from `pool` (swap-remove) until the cell
// has `target` tokens or the pool is empty. Documents too large for the
// remaining global budget are dropped from the pool: the budget only shrinks,
// so they could never be placed later either.
inline uint64_t draw_cell(std::vector<RankedDoc>& pool, Prng& rng, uint64_t target,
                          uint64_t global_remaining, std::vector<std::string>& sequence,
                          size_t& docs_drawn) {
  uint64_t drawn = 0;
  while (drawn < target && !pool.empty()) {
    size_t idx = static_cast<size_t>(rng.uniform_below(pool.size()));
    RankedDoc doc = pool[idx];
    pool[idx] = pool.back();
    pool.pop_back();
    if (doc.tokens > global_remaining - drawn) continue;  // would blow the total budget
    sequence.push_back(doc.id);
    drawn += doc.tokens;
    ++docs_drawn;
  }
  return drawn;
}

}  // namespace detail

// S1: strict easy->hard prefix under the token budget. Deterministic; the
// seed is recorded but unused.
inline OrderManifest build_vanilla(const std::vector<RankedDoc>& ordered, uint64_t budget,
                                   uint64_t seed) {
  if (ordered.empty()) fail(errc::data, "empty document order");
  OrderManifest m;
  m.seed = seed;
  PhaseCell cell;
  for (const auto& doc : ordered) {
    if (m.total_tokens + doc.tokens > budget) break;
    m.sequence.push_back(doc.id);
    m.total_tokens += doc.tokens;
    ++cell.doc_count;
  }
  cell.tokens = m.total_tokens;
  m.cells.push_back(cell);
  m.finish();
  return m;
}

// S2 pacing: per-group uniform draws without replacement; cell overshoot or
// deficit rolls into the next group's target so the realized total tracks T.
inline OrderManifest build_paced(const DifficultyGrouping& grouping, const Allocation& alloc,
                                 uint64_t seed) {
  if (static_cast<int>(alloc.tokens_per_group.size()) != grouping.group_count)
    fail(errc::config, "allocation group count does not match grouping");
  OrderManifest m;
  m.seed = seed;
  std::vector<std::vector<RankedDoc>> pools = grouping.groups;
  int64_t carry = 0;
  for (int gi = 0; gi < grouping.group_count; ++gi) {
    int64_t target = static_cast<int64_t>(alloc.tokens_per_group[static_cast<size_t>(gi)]) + carry;
    PhaseCell cell;
    cell.group = gi;
    cell.start_tokens = m.total_tokens;
    cell.start_index = m.sequence.size();
    if (target > 0) {
      Prng rng(derive_seed(seed, "cell", 0, static_cast<uint64_t>(gi)));
      uint64_t drawn = detail::draw_cell(pools[static_cast<size_t>(gi)], rng,
                                         static_cast<uint64_t>(target),
                                         alloc.total - m.total_tokens, m.sequence, cell.doc_count);
      cell.tokens = drawn;
      m.total_tokens += drawn;
      carry = target - static_cast<int64_t>(drawn);
    } else {
      carry = target;
    }
    m.cells.push_back(cell);
  }
  m.finish();
  return m;
}

// S2 interleaved: every interleave sweeps groups easy->hard with equal cell
// budgets; without-replacement pools are global across interleaves.
inline OrderManifest build_interleaved(const DifficultyGrouping& grouping,
                                       const std::vector<Allocation>& allocs, uint64_t seed) {
  OrderManifest m;
  m.seed = seed;
  uint64_t budget = 0;
  for (const auto& a : allocs) budget += a.total;
  std::vector<std::vector<RankedDoc>> pools = grouping.groups;
  int64_t carry = 0;
  for (size_t j = 0; j < allocs.size(); ++j) {
    if (static_cast<int>(allocs[j].tokens_per_group.size()) != grouping.group_count)
      fail(errc::config, "allocation group count does not match grouping");
    for (int gi = 0; gi < grouping.group_count; ++gi) {
      int64_t target =
          static_cast<int64_t>(allocs[j].tokens_per_group[static_cast<size_t>(gi)]) + carry;
      PhaseCell cell;
      cell.interleave = static_cast<int>(j);
      cell.group = gi;
      cell.start_tokens = m.total_tokens;
      cell.start_index = m.sequence.size();
      if (target > 0) {
        Prng rng(derive_seed(seed, "cell", j, static_cast<uint64_t>(gi)));
        uint64_t drawn = detail::draw_cell(pools[static_cast<size_t>(gi)], rng,
                                           static_cast<uint64_t>(target), budget - m.total_tokens,
                                           m.sequence, cell.doc_count);
        cell.tokens = drawn;
        m.total_tokens += drawn;
        carry = target - static_cast<int64_t>(drawn);
      } else {
        carry = target;
      }
      m.cells.push_back(cell);
    }
  }
  m.finish();
  return m;
}

// Uniform seeded permutation truncated at the token budget.
inline OrderManifest build_shuffled_baseline(const std::vector<RankedDoc>& docs, uint64_t budget,
                                             uint64_t seed) {
  if (docs.empty()) fail(errc::data, "empty document set");
  OrderManifest m;
  m.seed = seed;
  std::vector<RankedDoc> pool = docs;
  Prng rng(derive_seed(seed, "shuffle"));
  rng.shuffle(pool);
  PhaseCell cell;
  for (const auto& doc : pool) {
    if (m.total_tokens + doc.tokens > budget) break;
    m.sequence.push_back(doc.id);
    m.total_tokens += doc.tokens;
    ++cell.doc_count;
  }
  cell.tokens = m.total_tokens;
  m.cells.push_back(cell);
  m.finish();
  return m;
}

// Ablation: seeded uniform shuffle of the document prefix covering
// `cut_tokens`, flagged with the source order hash.
inline OrderManifest prefix_shuffle(const OrderManifest& source,
                                    const std::unordered_map<std::string, uint64_t>& token_counts,
                                    uint64_t cut_tokens, uint64_t seed) {
  if (cut_tokens == 0 || cut_tokens > source.total_tokens)
    fail(errc::usage, "prefix cut must be in (0, total_tokens]");
  OrderManifest m;
  m.plan = source.plan;
  m.seed = seed;
  m.ablation_of = source.order_hash;
  uint64_t cum = 0;
  for (const auto& id : source.sequence) {
    if (cum >= cut_tokens) break;
    m.sequence.push_back(id);
    cum += token_counts.at(id);
  }
  m.total_tokens = cum;
  Prng rng(derive_seed(seed, "prefix-shuffle"));
  rng.shuffle(m.sequence);
  PhaseCell cell;
  cell.tokens = cum;
  cell.doc_count = m.sequence.size();
  m.cells.push_back(cell);
  m.finish();
  return m;
}

// Materializes any plan. Warmup plans build the inner curriculum over the full
// pool, then a shuffled continuation over the disjoint remainder.
inline OrderManifest build_plan(const CurriculumPlan& plan, const ScoreTable& table,
                                const PolarityRegistry& polarity) {
  plan.validate();
  using Strategy = CurriculumPlan::Strategy;
  std::vector<RankedDoc> ordered = normalize_difficulty(table, plan.metric_id, polarity);
  OrderManifest m;
  switch (plan.strategy) {
    case Strategy::vanilla:
      m = build_vanilla(ordered, plan.budget, plan.seed);
      break;
    case Strategy::shuffled_baseline:
      m = build_shuffled_baseline(ordered, plan.budget, plan.seed);
      break;
    case Strategy::paced: {
      auto grouping = make_groups(ordered, plan.group_count, plan.grouping, plan.metric_id);
      auto alloc = pacing_allocation(plan.pacing, plan.group_count, plan.budget);
      m = build_paced(grouping, alloc, plan.seed);
      break;
    }
    case Strategy::interleaved: {
      auto grouping = make_groups(ordered, plan.group_count, plan.grouping, plan.metric_id);
      auto allocs = interleave_allocation(plan.group_count, plan.interleaves, plan.budget);
      m = build_interleaved(grouping, allocs, plan.seed);
      break;
    }
    case Strategy::warmup: {
      CurriculumPlan inner = *plan.inner;
      inner.budget = plan.budget;
      inner.seed = plan.seed;
      OrderManifest phase1 = build_plan(inner, table, polarity);
      std::unordered_set<std::string> used(phase1.sequence.begin(), phase1.sequence.end());
      std::vector<RankedDoc> remaining;
      for (const auto& d : ordered)
        if (!used.count(d.id)) remaining.push_back(d);
      if (remaining.empty()) fail(errc::data, "no documents left for warmup continuation phase");
      OrderManifest phase2 = build_shuffled_baseline(remaining, plan.continuation_budget,
                                                     warmup_phase2_seed(plan.seed));
      m = phase1;
      for (auto& c : phase2.cells) {
        c.phase = 1;
        c.start_tokens += phase1.total_tokens;
        c.start_index += phase1.sequence.size();
        m.cells.push_back(c);
      }
      m.sequence.insert(m.sequence.end(), phase2.sequence.begin(), phase2.sequence.end());
      m.total_tokens += phase2.total_tokens;
      m.finish();
      break;
    }
  }
  m.plan = plan;
  m.seed = plan.seed;
  return m;
}

// Writes JSONL shards in manifest order; a shard closes when the next document
// no longer fits, so every shard except possibly single oversized documents
// stays within shard_tokens.
inline std::vector<std::string> emit_shards(const OrderManifest& manifest, const Corpus& corpus,
                                            uint64_t shard_tokens, const std::string& out_dir) {
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < corpus.docs.size(); ++i) index[corpus.docs[i].id] = i;
  std::vector<std::string> paths;
  std::ofstream out;
  uint64_t current = 0;
  size_t shard_no = 0;
  auto open_next = [&] {
    std::string path = out_dir + "/shard-" + std::to_string(shard_no++) + ".jsonl";
    out.close();
    out.open(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write shard: " + path);
    paths.push_back(path);
    current = 0;
  };
  for (const auto& id : manifest.sequence) {
    auto it = index.find(id);
    if (it == index.end()) fail(errc::data, "manifest doc id not found in corpus: " + id);
    uint64_t tokens = corpus.token_counts[it->second];
    if (paths.empty() || (current > 0 && current + tokens > shard_tokens)) open_next();
    const Document& doc = corpus.docs[it->second];
    nlohmann::json j;
    j["id"] = doc.id;
    j["text"] = doc.text;
    out << j.dump() << "\n";
    current += tokens;
  }
  out.close();
  return paths;
}

}  // namespace currictl
