#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "currictl/corpus.hpp"
#include "currictl/errors.hpp"
#include "currictl/ngram_lm.hpp"
#include "currictl/prng.hpp"
#include "currictl/score_table.hpp"
#include "json.hpp"

namespace currictl {

struct Trajectory {
  struct Checkpoint {
    uint64_t tokens_seen = 0;
    double heldout_ppl = 0.0;
  };
  std::vector<Checkpoint> checkpoints;
  std::string plan_label;
  uint64_t seed = 0;

  void write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write trajectory: " + path);
    out << "tokens_seen,heldout_ppl\n";
    for (const auto& c : checkpoints)
      out << c.tokens_seen << "," << format_double(c.heldout_ppl) << "\n";
  }

  static Trajectory read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot read trajectory: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("tokens_seen,heldout_ppl", 0) != 0)
      fail(errc::data, "bad trajectory header in " + path);
    Trajectory t;
    size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      size_t comma = line.find(',');
      if (comma == std::string::npos) fail(errc::data, "bad trajectory row in " + path);
      Checkpoint c;
      c.tokens_seen = std::stoull(line.substr(0, comma));
      c.heldout_ppl = parse_double(line.substr(comma + 1), path + ":" + std::to_string(lineno));
      t.checkpoints.push_back(c);
    }
    return t;
  }
};

// Uniform seeded sample of document ids, drawn before any ordering.
inline std::vector<std::string> sample_heldout_ids(const std::vector<std::string>& doc_ids,
                                                   size_t count, uint64_t seed) {
  if (count >= doc_ids.size())
    fail(errc::config, "held-out sample must be smaller than the corpus");
  std::vector<std::string> pool = doc_ids;
  Prng rng(derive_seed(seed, "heldout"));
  std::vector<std::string> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    size_t idx = static_cast<size_t>(rng.uniform_below(pool.size()));
    out.push_back(pool[idx]);
    pool[idx] = pool.back();
    pool.pop_back();
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double heldout_perplexity(const NGramModel& model, const std::vector<Document>& heldout) {
  double logp = 0.0;
  uint64_t count = 0;
  for (const auto& doc : heldout) {
    auto [lp, c] = model.accumulate_log_prob(split_words(doc.text));
    logp += lp;
    count += c;
  }
  if (count == 0) fail(errc::degenerate_input, "held-out set has no scorable tokens");
  return std::exp(-logp / static_cast<double>(count));
}

// Trains the proxy LM incrementally along the given document order, recording
// held-out perplexity whenever tokens_seen crosses a checkpoint-interval
// boundary (plus a final partial checkpoint).
inline Trajectory run_probe(const std::vector<Document>& ordered_docs,
                            const std::vector<Document>& heldout, uint64_t checkpoint_tokens,
                            LmConfig lm_config, uint64_t seed, std::string plan_label = "") {
  if (checkpoint_tokens == 0) fail(errc::config, "checkpoint interval must be > 0");
  std::unordered_set<std::string> heldout_ids;
  for (const auto& d : heldout) heldout_ids.insert(d.id);
  for (const auto& d : ordered_docs)
    if (heldout_ids.count(d.id))
      fail(errc::data, "held-out document leaks into training order: " + d.id);

  Trajectory traj;
  traj.plan_label = std::move(plan_label);
  traj.seed = seed;
  NGramModel model(lm_config);
  uint64_t tokens_seen = 0;
  uint64_t next_mark = checkpoint_tokens;
  for (const auto& doc : ordered_docs) {
    model.add_document(doc.text);
    uint64_t now = model.trained_tokens();
    if (now >= next_mark) {
      // checkpoints land on the fixed grid so trajectories from different
      // orders stay comparable; one document may cross several marks
      double ppl = heldout_perplexity(model, heldout);
      while (next_mark <= now) {
        traj.checkpoints.push_back({next_mark, ppl});
        next_mark += checkpoint_tokens;
      }
    }
    tokens_seen = now;
  }
  if (tokens_seen == 0) fail(errc::data, "training order contains no tokens");
  if (traj.checkpoints.empty() || traj.checkpoints.back().tokens_seen != tokens_seen)
    traj.checkpoints.push_back({tokens_seen, heldout_perplexity(model, heldout)});
  return traj;
}

struct SavingsReport {
  double baseline_best = 0.0;
  std::optional<uint64_t> cl_steps_to_baseline_best;
  uint64_t baseline_steps_to_own_best = 0;
  std::optional<double> savings_fraction;
  std::string not_reached_reason;
  double closest_approach_gap = 0.0;  // when the target was never reached
  double final_delta = 0.0;           // relative final-ppl improvement

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["baseline_best"] = baseline_best;
    j["baseline_steps_to_own_best"] = baseline_steps_to_own_best;
    if (cl_steps_to_baseline_best)
      j["cl_steps_to_baseline_best"] = *cl_steps_to_baseline_best;
    else
      j["cl_steps_to_baseline_best"] = nullptr;
    if (savings_fraction) {
      j["savings_fraction"] = *savings_fraction;
    } else {
      j["savings_fraction"] = nullptr;
      j["not_reached_reason"] = not_reached_reason;
      j["closest_approach_gap"] = closest_approach_gap;
    }
    j["final_delta"] = final_delta;
    return j;
  }
};

// Steps-to-baseline statistic on a lower-is-better trajectory: the fraction of
// training tokens the curriculum saves before first matching the baseline's
// best held-out perplexity.
inline SavingsReport savings(const Trajectory& cl, const Trajectory& baseline) {
  if (cl.checkpoints.empty() || baseline.checkpoints.empty())
    fail(errc::insufficient_data, "empty trajectory");
  if (cl.checkpoints.size() != baseline.checkpoints.size())
    fail(errc::usage, "trajectories do not share a checkpoint grid");
  for (size_t i = 0; i < cl.checkpoints.size(); ++i)
    if (cl.checkpoints[i].tokens_seen != baseline.checkpoints[i].tokens_seen)
      fail(errc::usage, "trajectories do not share a checkpoint grid");

  SavingsReport r;
  r.baseline_best = baseline.checkpoints[0].heldout_ppl;
  r.baseline_steps_to_own_best = baseline.checkpoints[0].tokens_seen;
  for (const auto& c : baseline.checkpoints) {
    if (c.heldout_ppl < r.baseline_best) {
      r.baseline_best = c.heldout_ppl;
      r.baseline_steps_to_own_best = c.tokens_seen;
    }
  }
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& c : cl.checkpoints) {
    if (c.heldout_ppl <= r.baseline_best) {
      r.cl_steps_to_baseline_best = c.tokens_seen;
      break;
    }
    closest = std::min(closest, c.heldout_ppl - r.baseline_best);
  }
  if (r.cl_steps_to_baseline_best) {
    double b = static_cast<double>(r.baseline_steps_to_own_best);
    double c = static_cast<double>(*r.cl_steps_to_baseline_best);
    r.savings_fraction = (b - c) / b;
  } else {
    r.not_reached_reason = "curriculum never reached the baseline's best perplexity";
    r.closest_approach_gap = closest;
  }
  double bf = baseline.checkpoints.back().heldout_ppl;
  double cf = cl.checkpoints.back().heldout_ppl;
  r.final_delta = (bf - cf) / bf;
  return r;
}

}  // namespace currictl
