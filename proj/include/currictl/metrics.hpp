#pragma once

#include <zlib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "currictl/corpus.hpp"
#include "currictl/errors.hpp"
#include "currictl/metric_id.hpp"
#include "currictl/ngram_lm.hpp"
#include "currictl/score_table.hpp"
#include "currictl/text_stats.hpp"
#include "currictl/tokenizer.hpp"

namespace currictl {

inline constexpr int kDeflateLevel = 6;         // pinned so ratios are reproducible
inline constexpr size_t kCompressionMinBytes = 32;
inline constexpr double kMtldThreshold = 0.72;
inline constexpr size_t kMtldMinTokens = 10;
inline constexpr uint64_t kHddSampleSize = 42;

// original bytes / DEFLATE-compressed bytes; redundant text compresses well
inline double compression_ratio(std::string_view text, int level = kDeflateLevel) {
  if (text.size() < kCompressionMinBytes)
    fail(errc::degenerate_input,
         "text shorter than " + std::to_string(kCompressionMinBytes) + " bytes");
  uLongf bound = compressBound(static_cast<uLong>(text.size()));
  std::vector<Bytef> out(bound);
  uLongf out_len = bound;
  int rc = compress2(out.data(), &out_len, reinterpret_cast<const Bytef*>(text.data()),
                     static_cast<uLong>(text.size()), level);
  if (rc != Z_OK) fail(errc::io, "deflate failed with code " + std::to_string(rc));
  return static_cast<double>(text.size()) / static_cast<double>(out_len);
}

inline double fertility(std::string_view text, const Tokenizer& tokenizer) {
  size_t words = split_words(text).size();
  if (words == 0) fail(errc::degenerate_input, "fertility of text with no words");
  return static_cast<double>(tokenizer.count(text)) / static_cast<double>(words);
}

inline double flesch_reading_ease(const TextStats& s) {
  if (s.words == 0) fail(errc::degenerate_input, "readability of text with no words");
  double wps = static_cast<double>(s.words) / static_cast<double>(s.sentences);
  double spw = static_cast<double>(s.syllables) / static_cast<double>(s.words);
  return 206.835 - 1.015 * wps - 84.6 * spw;
}

// The grade-level readability family; dale_chall additionally requires
// TextStats computed with an easy-word list.
inline double readability_family(const TextStats& s, MetricId which, bool has_word_list = true) {
  if (s.words == 0) fail(errc::degenerate_input, "readability of text with no words");
  double W = static_cast<double>(s.words);
  double S = static_cast<double>(s.sentences);
  double syl = static_cast<double>(s.syllables);
  double chars = static_cast<double>(s.characters);
  double cw = static_cast<double>(s.complex_words);
  switch (which) {
    case MetricId::flesch_reading_ease:
      return flesch_reading_ease(s);
    case MetricId::fk_grade:
      return 0.39 * (W / S) + 11.8 * (syl / W) - 15.59;
    case MetricId::coleman_liau: {
      double L = 100.0 * chars / W;
      double S100 = 100.0 * S / W;
      return 0.0588 * L - 0.296 * S100 - 15.8;
    }
    case MetricId::ari:
      return 4.71 * (chars / W) + 0.5 * (W / S) - 21.43;
    case MetricId::gunning_fog:
      return 0.4 * ((W / S) + 100.0 * (cw / W));
    case MetricId::smog:
      return 1.0430 * std::sqrt(cw * 30.0 / S) + 3.1291;
    case MetricId::dale_chall: {
      if (!has_word_list) fail(errc::config, "dale_chall requires an easy-word list");
      double pct = 100.0 * static_cast<double>(s.difficult_words) / W;
      double score = 0.1579 * pct + 0.0496 * (W / S);
      if (pct > 5.0) score += 3.6365;
      return score;
    }
    case MetricId::linsear_write: {
      // easy words (<3 syllables) score 1, hard words 3; provisional result
      // is points per sentence
      double easy = W - cw;
      double r = (easy + 3.0 * cw) / S;
      return r > 20.0 ? r / 2.0 : (r - 2.0) / 2.0;
    }
    default:
      fail(errc::config, "not a readability metric: " + std::string(metric_name(which)));
  }
}

// Bidirectional MTLD (factor threshold 0.72): mean of the forward and reverse
// factor-count passes. A direction where the running TTR never reaches the
// threshold counts as exactly one factor.
inline double mtld(const std::vector<std::string>& tokens) {
  if (tokens.size() < kMtldMinTokens)
    fail(errc::degenerate_input, "mtld needs at least " + std::to_string(kMtldMinTokens) +
                                     " tokens, got " + std::to_string(tokens.size()));
  auto one_direction = [&](bool reverse) {
    double factors = 0.0;
    std::unordered_set<std::string_view> types;
    size_t len = 0;
    double last_ttr = 1.0;
    for (size_t i = 0; i < tokens.size(); ++i) {
      const std::string& tok = tokens[reverse ? tokens.size() - 1 - i : i];
      types.insert(tok);
      ++len;
      last_ttr = static_cast<double>(types.size()) / static_cast<double>(len);
      if (last_ttr <= kMtldThreshold) {
        factors += 1.0;
        types.clear();
        len = 0;
        last_ttr = 1.0;
      }
    }
    if (len > 0) factors += (1.0 - last_ttr) / (1.0 - kMtldThreshold);
    if (factors == 0.0) return static_cast<double>(tokens.size());
    return static_cast<double>(tokens.size()) / factors;
  };
  return 0.5 * (one_direction(false) + one_direction(true));
}

inline double ttr(const std::vector<std::string>& tokens) {
  if (tokens.empty()) fail(errc::degenerate_input, "ttr of empty token list");
  std::unordered_set<std::string_view> types(tokens.begin(), tokens.end());
  return static_cast<double>(types.size()) / static_cast<double>(tokens.size());
}

// HD-D with the standard 42-token draw: expected per-draw type contribution,
// P(type present) computed from the hypergeometric absence probability.
inline double hdd(const std::vector<std::string>& tokens) {
  uint64_t n = tokens.size();
  if (n < kHddSampleSize)
    fail(errc::degenerate_input, "hdd needs at least " + std::to_string(kHddSampleSize) +
                                     " tokens, got " + std::to_string(n));
  std::unordered_map<std::string_view, uint64_t> freq;
  for (const auto& t : tokens) ++freq[t];
  auto log_choose = [](double a, double b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
  };
  double total = static_cast<double>(n);
  double sample = static_cast<double>(kHddSampleSize);
  double sum = 0.0;
  for (const auto& [type, count] : freq) {
    double rest = total - static_cast<double>(count);
    double p_absent =
        rest < sample ? 0.0 : std::exp(log_choose(rest, sample) - log_choose(total, sample));
    sum += (1.0 - p_absent) / sample;
  }
  return sum;
}

inline uint64_t num_tokens(std::string_view text, const Tokenizer& tokenizer) {
  return tokenizer.count(text);
}

struct ScoreError {
  std::string doc_id;
  std::string metric;
  std::string reason;
};

struct MetricTiming {
  uint64_t docs = 0;
  double seconds = 0.0;
};

struct ScoreReport {
  std::vector<ScoreError> errors;
  std::map<MetricId, MetricTiming> timings;
  double wall_seconds = 0.0;

  void write_timing_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write timing report: " + path);
    out << "metric_id,docs,seconds,docs_per_second\n";
    for (const auto& [id, t] : timings) {
      double rate = t.seconds > 0.0 ? static_cast<double>(t.docs) / t.seconds : 0.0;
      out << metric_name(id) << "," << t.docs << "," << format_double(t.seconds) << ","
          << format_double(rate) << "\n";
    }
  }

  void write_error_log(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write error log: " + path);
    for (const auto& e : errors) out << e.doc_id << "\t" << e.metric << "\t" << e.reason << "\n";
  }
};

// Scores every document on every requested metric. Documents failing any
// requested metric are dropped from the table and logged. Work is sharded
// across threads; output is restored to manifest order, so the table is
// independent of the thread count.
inline ScoreTable score_corpus(const Corpus& corpus, const std::vector<MetricId>& metrics,
                               const Tokenizer& tokenizer, const NGramModel* lm,
                               ScoreReport* report = nullptr, unsigned threads = 1,
                               const DaleChallList* easy_words = nullptr) {
  bool wants_ppl = false, wants_dale = false, wants_stats = false, wants_word_tokens = false;
  for (MetricId m : metrics) {
    wants_ppl = wants_ppl || m == MetricId::perplexity;
    wants_dale = wants_dale || m == MetricId::dale_chall;
    wants_stats = wants_stats || m == MetricId::flesch_reading_ease || m == MetricId::fk_grade ||
                  m == MetricId::coleman_liau || m == MetricId::ari || m == MetricId::dale_chall ||
                  m == MetricId::linsear_write || m == MetricId::gunning_fog || m == MetricId::smog;
    wants_word_tokens = wants_word_tokens || m == MetricId::mtld || m == MetricId::ttr ||
                        m == MetricId::hdd;
  }
  if (wants_ppl && !lm) fail(errc::config, "perplexity requested but no language model provided");
  if (!wants_ppl && lm) fail(errc::config, "language model provided but perplexity not requested");
  if (wants_dale && !easy_words) fail(errc::config, "dale_chall requires an easy-word list");
  if (lm) lm->finalize();

  auto wall_start = std::chrono::steady_clock::now();
  size_t n = corpus.docs.size();
  struct RowResult {
    bool ok = false;
    std::map<MetricId, double> values;
    std::vector<ScoreError> errors;
    std::map<MetricId, double> seconds;
  };
  std::vector<RowResult> results(n);

  auto score_one = [&](size_t i) {
    const Document& doc = corpus.docs[i];
    RowResult& r = results[i];
    r.ok = true;
    TextStats stats;
    std::vector<std::string> word_tokens;
    if (wants_stats) stats = compute_text_stats(doc.text, tokenizer, easy_words);
    if (wants_word_tokens) word_tokens = split_words(doc.text);
    for (MetricId m : metrics) {
      auto t0 = std::chrono::steady_clock::now();
      try {
        double v = 0.0;
        switch (m) {
          case MetricId::compression_ratio: v = compression_ratio(doc.text); break;
          case MetricId::fertility: v = fertility(doc.text, tokenizer); break;
          case MetricId::mtld: v = mtld(word_tokens); break;
          case MetricId::ttr: v = ttr(word_tokens); break;
          case MetricId::hdd: v = hdd(word_tokens); break;
          case MetricId::num_tokens:
            v = static_cast<double>(corpus.token_counts[i]);
            break;
          case MetricId::perplexity: v = lm->perplexity(doc.text); break;
          default: v = readability_family(stats, m, easy_words != nullptr); break;
        }
        if (!std::isfinite(v)) fail(errc::degenerate_input, "non-finite score");
        r.values[m] = v;
      } catch (const error& e) {
        r.ok = false;
        r.errors.push_back({doc.id, std::string(metric_name(m)), e.what()});
      }
      r.seconds[m] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) score_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) score_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  ScoreTable table;
  table.metrics = metrics;
  for (size_t i = 0; i < n; ++i) {
    RowResult& r = results[i];
    if (report) {
      for (auto& [m, sec] : r.seconds) {
        auto& t = report->timings[m];
        t.docs += 1;
        t.seconds += sec;
      }
      for (auto& e : r.errors) report->errors.push_back(std::move(e));
    }
    if (r.ok) table.add_row(corpus.docs[i].id, corpus.token_counts[i], std::move(r.values));
  }
  if (report)
    report->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return table;
}

}  // namespace currictl
