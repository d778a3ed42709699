#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "currictl/errors.hpp"
#include "currictl/tokenizer.hpp"

namespace currictl {

struct LmConfig {
  enum class Smoothing { kneser_ney, add_k };
  int order = 5;
  Smoothing smoothing = Smoothing::kneser_ney;
  double discount = 0.75;  // fixed KN discount D, in (0,1)
  double k = 0.01;         // add-k pseudo-count
};

// Whitespace-token n-gram model with interpolated Kneser-Ney (single fixed
// discount) or add-k smoothing. Documents are wrapped in <s>/</s>; contexts
// never cross document boundaries. Training is incremental: add_document may
// be called again after scoring, derived tables are rebuilt on demand.
class NGramModel {
 public:
  static constexpr uint32_t kBos = 0;
  static constexpr uint32_t kEos = 1;
  static constexpr uint32_t kUnk = 0xffffffffu;  // query-time only, never stored

  explicit NGramModel(LmConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.order < 1) fail(errc::config, "n-gram order must be >= 1");
    if (cfg_.discount <= 0.0 || cfg_.discount >= 1.0)
      fail(errc::config, "KN discount must be in (0,1)");
    if (cfg_.k <= 0.0) fail(errc::config, "add-k constant must be > 0");
    id_of_.emplace("<s>", kBos);
    token_of_.push_back("<s>");
    id_of_.emplace("</s>", kEos);
    token_of_.push_back("</s>");
  }

  const LmConfig& config() const { return cfg_; }
  size_t vocab_size() const { return token_of_.size(); }
  uint64_t trained_tokens() const { return trained_tokens_; }

  void add_document(std::string_view text) {
    std::vector<std::string> words = split_words(text);
    if (words.empty()) return;
    std::vector<uint32_t> stream;
    stream.reserve(words.size() + static_cast<size_t>(cfg_.order));
    for (int i = 0; i + 1 < cfg_.order; ++i) stream.push_back(kBos);
    for (const auto& w : words) stream.push_back(intern(w));
    stream.push_back(kEos);
    size_t n = static_cast<size_t>(cfg_.order);
    for (size_t p = 0; p + n <= stream.size(); ++p) top_counts_[pack(&stream[p], n)] += 1;
    trained_tokens_ += words.size();
    dirty_ = true;
  }

  // Rebuilds marginal/continuation tables. Must be called (or any scoring
  // function invoked) before the model is shared across reader threads.
  void finalize() const {
    if (!dirty_) return;
    size_t n = static_cast<size_t>(cfg_.order);
    raw_.assign(n, {});
    raw_[n - 1] = top_counts_;
    for (size_t m = n - 1; m >= 1; --m) {  // raw_[m-1] = marginal of raw_[m]
      for (const auto& [key, c] : raw_[m]) raw_[m - 1][key.substr(4)] += c;
    }
    cont_.assign(n, {});
    for (size_t m = 1; m < n; ++m) {  // cont_[m-1](g) = distinct left extensions in raw_[m]
      for (const auto& [key, c] : raw_[m]) cont_[m - 1][key.substr(4)] += 1;
    }
    ctx_.assign(n, {});
    for (size_t m = 0; m < n; ++m) {
      const auto& tbl = level_counts(m + 1);
      auto& ctx = ctx_[m];
      for (const auto& [key, c] : tbl) {
        auto& agg = ctx[key.substr(0, key.size() - 4)];
        agg.sum += c;
        agg.distinct += 1;
      }
    }
    unigram_total_ = 0;
    unigram_types_ = 0;
    for (const auto& [key, c] : level_counts(1)) {
      unigram_total_ += c;
      ++unigram_types_;
    }
    ctx_addk_.clear();
    if (cfg_.smoothing == LmConfig::Smoothing::add_k) ctx_addk(0);  // pre-build for readers
    dirty_ = false;
  }

  double log_prob(uint32_t token, const std::vector<uint32_t>& context) const {
    finalize();
    if (unigram_total_ == 0) fail(errc::config, "model has no training data");
    size_t n = static_cast<size_t>(cfg_.order);
    size_t ctx_len = std::min(context.size(), n - 1);
    const uint32_t* ctx = context.data() + (context.size() - ctx_len);
    double p = cfg_.smoothing == LmConfig::Smoothing::kneser_ney
                   ? prob_kn(token, ctx, ctx_len + 1)
                   : prob_addk(token, ctx, ctx_len + 1);
    return std::log(p);
  }

  // exp of the mean negative log-probability over the document's tokens plus
  // the closing </s>; unknown tokens are scored as UNK.
  double perplexity(std::string_view text) const {
    std::vector<std::string> words = split_words(text);
    if (words.empty()) fail(errc::degenerate_input, "perplexity of empty text");
    auto [logp, count] = accumulate_log_prob(words);
    return std::exp(-logp / static_cast<double>(count));
  }

  // (total log-probability, scored-token count); lets callers aggregate a
  // corpus-level perplexity across documents.
  std::pair<double, uint64_t> accumulate_log_prob(const std::vector<std::string>& words) const {
    finalize();
    size_t n = static_cast<size_t>(cfg_.order);
    std::vector<uint32_t> ids;
    ids.reserve(words.size() + n);
    for (size_t i = 0; i + 1 < n; ++i) ids.push_back(kBos);
    for (const auto& w : words) ids.push_back(lookup(w));
    ids.push_back(kEos);
    double logp = 0.0;
    uint64_t count = 0;
    size_t first_scored = n >= 1 ? n - 1 : 0;
    std::vector<uint32_t> ctx;
    for (size_t p = first_scored; p < ids.size(); ++p) {
      ctx.assign(ids.begin() + static_cast<std::ptrdiff_t>(p - (n - 1)),
                 ids.begin() + static_cast<std::ptrdiff_t>(p));
      logp += log_prob(ids[p], ctx);
      ++count;
    }
    return {logp, count};
  }

  uint32_t lookup(std::string_view token) const {
    auto it = id_of_.find(std::string(token));
    return it == id_of_.end() ? kUnk : it->second;
  }

  // Raw count tables for all orders <= n (order m table at index m-1).
  const std::unordered_map<std::string, uint64_t>& raw_counts(int order) const {
    finalize();
    return raw_.at(static_cast<size_t>(order - 1));
  }

  static std::string pack(const uint32_t* ids, size_t n) {
    std::string key(n * 4, '\0');
    std::memcpy(key.data(), ids, n * 4);
    return key;
  }

  void save(const std::string& path) const {
    finalize();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write model: " + path);
    out << "CURRICTL-NGLM 1\n";
    out << "order " << cfg_.order << "\n";
    out << "smoothing "
        << (cfg_.smoothing == LmConfig::Smoothing::kneser_ney ? "kneser_ney" : "add_k") << "\n";
    out << "discount " << cfg_.discount << "\n";
    out << "k " << cfg_.k << "\n";
    out << "trained_tokens " << trained_tokens_ << "\n";
    out << "vocab " << token_of_.size() << "\n";
    for (const auto& t : token_of_) out << t << "\n";
    out << "counts " << top_counts_.size() << "\n";
    for (const auto& [key, c] : top_counts_) {
      size_t n = key.size() / 4;
      for (size_t i = 0; i < n; ++i) {
        uint32_t id;
        std::memcpy(&id, key.data() + i * 4, 4);
        out << id << " ";
      }
      out << c << "\n";
    }
  }

  static NGramModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io, "cannot read model: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "CURRICTL-NGLM" || version != 1)
      fail(errc::data, "unrecognized model header in " + path);
    LmConfig cfg;
    std::string field, smoothing;
    uint64_t trained = 0;
    size_t vocab = 0;
    in >> field >> cfg.order >> field >> smoothing >> field >> cfg.discount >> field >> cfg.k >>
        field >> trained >> field >> vocab;
    cfg.smoothing =
        smoothing == "add_k" ? LmConfig::Smoothing::add_k : LmConfig::Smoothing::kneser_ney;
    NGramModel model(cfg);
    model.trained_tokens_ = trained;
    model.token_of_.clear();
    model.id_of_.clear();
    std::string tok;
    for (size_t i = 0; i < vocab; ++i) {
      in >> tok;
      model.id_of_.emplace(tok, static_cast<uint32_t>(i));
      model.token_of_.push_back(tok);
    }
    size_t entries = 0;
    in >> field >> entries;
    size_t n = static_cast<size_t>(cfg.order);
    std::vector<uint32_t> ids(n);
    for (size_t e = 0; e < entries; ++e) {
      for (size_t i = 0; i < n; ++i) in >> ids[i];
      uint64_t c;
      in >> c;
      model.top_counts_[pack(ids.data(), n)] = c;
    }
    if (!in) fail(errc::data, "truncated model file: " + path);
    model.dirty_ = true;
    return model;
  }

  bool operator==(const NGramModel& other) const {
    return cfg_.order == other.cfg_.order && token_of_ == other.token_of_ &&
           top_counts_ == other.top_counts_;
  }

 private:
  struct CtxAgg {
    uint64_t sum = 0;
    uint64_t distinct = 0;
  };

  uint32_t intern(const std::string& token) {
    auto [it, inserted] = id_of_.emplace(token, static_cast<uint32_t>(token_of_.size()));
    if (inserted) token_of_.push_back(token);
    return it->second;
  }

  // Count table backing probability level m: raw counts at the top order,
  // left-extension (continuation) type counts below it.
  const std::unordered_map<std::string, uint64_t>& level_counts(size_t m) const {
    size_t n = static_cast<size_t>(cfg_.order);
    return m == n ? raw_[n - 1] : cont_[m - 1];
  }

  double uniform_floor() const { return 1.0 / static_cast<double>(token_of_.size() + 1); }

  double prob_unigram_kn(uint32_t token) const {
    const auto& uni = level_counts(1);
    double cc = 0.0;
    if (token != kUnk) {
      uint32_t id = token;
      auto it = uni.find(pack(&id, 1));
      if (it != uni.end()) cc = static_cast<double>(it->second);
    }
    double total = static_cast<double>(unigram_total_);
    double lambda = cfg_.discount * static_cast<double>(unigram_types_) / total;
    return std::max(cc - cfg_.discount, 0.0) / total + lambda * uniform_floor();
  }

  double prob_kn(uint32_t token, const uint32_t* ctx, size_t m) const {
    if (m == 1) return prob_unigram_kn(token);
    bool ctx_known = true;
    for (size_t i = 0; i < m - 1 && ctx_known; ++i) ctx_known = ctx[i] != kUnk;
    const CtxAgg* agg = nullptr;
    if (ctx_known) {
      const auto& ctx_tbl = ctx_[m - 1];
      auto it = ctx_tbl.find(pack(ctx, m - 1));
      if (it != ctx_tbl.end()) agg = &it->second;
    }
    if (!agg || agg->sum == 0) return prob_kn(token, ctx + 1, m - 1);
    double num = 0.0;
    if (token != kUnk) {
      std::vector<uint32_t> gram(ctx, ctx + m - 1);
      gram.push_back(token);
      const auto& tbl = level_counts(m);
      auto it = tbl.find(pack(gram.data(), m));
      if (it != tbl.end()) num = static_cast<double>(it->second);
    }
    double denom = static_cast<double>(agg->sum);
    double lambda = cfg_.discount * static_cast<double>(agg->distinct) / denom;
    return std::max(num - cfg_.discount, 0.0) / denom + lambda * prob_kn(token, ctx + 1, m - 1);
  }

  double prob_addk(uint32_t token, const uint32_t* ctx, size_t m) const {
    double extra = cfg_.k * static_cast<double>(token_of_.size() + 1);
    if (m == 1) {
      double c = 0.0;
      if (token != kUnk) {
        uint32_t id = token;
        const auto& uni = raw_[0];
        auto it = uni.find(pack(&id, 1));
        if (it != uni.end()) c = static_cast<double>(it->second);
      }
      const auto& agg = ctx_addk(0).at(std::string());
      return (c + cfg_.k) / (static_cast<double>(agg.sum) + extra);
    }
    bool ctx_known = true;
    for (size_t i = 0; i < m - 1 && ctx_known; ++i) ctx_known = ctx[i] != kUnk;
    const CtxAgg* agg = nullptr;
    if (ctx_known) {
      const auto& ctx_tbl = ctx_addk(m - 1);
      auto it = ctx_tbl.find(pack(ctx, m - 1));
      if (it != ctx_tbl.end()) agg = &it->second;
    }
    if (!agg || agg->sum == 0) return prob_addk(token, ctx + 1, m - 1);
    double c = 0.0;
    if (token != kUnk) {
      std::vector<uint32_t> gram(ctx, ctx + m - 1);
      gram.push_back(token);
      const auto& tbl = raw_[m - 1];
      auto it = tbl.find(pack(gram.data(), m));
      if (it != tbl.end()) c = static_cast<double>(it->second);
    }
    return (c + cfg_.k) / (static_cast<double>(agg->sum) + extra);
  }

  // add-k denominators come from raw tables at every level
  const std::unordered_map<std::string, CtxAgg>& ctx_addk(size_t ctx_len) const {
    if (ctx_addk_.size() != static_cast<size_t>(cfg_.order)) {
      ctx_addk_.assign(static_cast<size_t>(cfg_.order), {});
      for (size_t m = 0; m < static_cast<size_t>(cfg_.order); ++m) {
        for (const auto& [key, c] : raw_[m]) {
          auto& agg = ctx_addk_[m][key.substr(0, key.size() - 4)];
          agg.sum += c;
          agg.distinct += 1;
        }
      }
    }
    return ctx_addk_[ctx_len];
  }

  LmConfig cfg_;
  std::unordered_map<std::string, uint32_t> id_of_;
  std::vector<std::string> token_of_;
  std::unordered_map<std::string, uint64_t> top_counts_;
  uint64_t trained_tokens_ = 0;

  mutable bool dirty_ = true;
  mutable std::vector<std::unordered_map<std::string, uint64_t>> raw_;
  mutable std::vector<std::unordered_map<std::string, uint64_t>> cont_;
  mutable std::vector<std::unordered_map<std::string, CtxAgg>> ctx_;
  mutable std::vector<std::unordered_map<std::string, CtxAgg>> ctx_addk_;
  mutable uint64_t unigram_total_ = 0;
  mutable uint64_t unigram_types_ = 0;
};

inline NGramModel train_lm(const std::vector<std::string>& doc_texts, LmConfig cfg = {}) {
  NGramModel model(cfg);
  for (const auto& text : doc_texts) model.add_document(text);
  model.finalize();
  return model;
}

}  // namespace currictl
