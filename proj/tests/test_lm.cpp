#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>

#include "currictl/ngram_lm.hpp"
#include "currictl/prng.hpp"
#include "currictl/synth.hpp"

using namespace currictl;
using Catch::Matchers::WithinAbs;

namespace {

LmConfig kn_config(int order) {
  LmConfig cfg;
  cfg.order = order;
  cfg.smoothing = LmConfig::Smoothing::kneser_ney;
  return cfg;
}

LmConfig addk_config(int order) {
  LmConfig cfg;
  cfg.order = order;
  cfg.smoothing = LmConfig::Smoothing::add_k;
  return cfg;
}

// Sums P(token | context) over the whole vocabulary plus UNK.
double context_mass(const NGramModel& model, const std::vector<uint32_t>& ctx,
                    size_t vocab_size) {
  double sum = 0.0;
  for (uint32_t t = 0; t < vocab_size; ++t) sum += std::exp(model.log_prob(t, ctx));
  sum += std::exp(model.log_prob(NGramModel::kUnk, ctx));
  return sum;
}

std::vector<std::string> synth_texts(uint64_t seed, uint64_t pool_seed, size_t docs,
                                     size_t words) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.pool_seed = pool_seed;
  cfg.docs = docs;
  cfg.min_words = words;
  cfg.max_words = words;
  std::vector<std::string> out;
  for (auto& d : SynthCorpus(cfg).generate()) out.push_back(std::move(d.text));
  return out;
}

// Zipf-like stream over a small vocabulary: P(rank k) ~ 1/k. A head-heavy
// distribution makes extra training data genuinely informative.
std::vector<std::string> zipf_texts(uint64_t seed, size_t docs, size_t words) {
  const size_t types = 200;
  std::vector<double> cdf(types);
  double norm = 0.0;
  for (size_t k = 0; k < types; ++k) norm += 1.0 / static_cast<double>(k + 1);
  double cum = 0.0;
  for (size_t k = 0; k < types; ++k) {
    cum += 1.0 / (static_cast<double>(k + 1) * norm);
    cdf[k] = cum;
  }
  Prng rng(seed);
  std::vector<std::string> out;
  for (size_t d = 0; d < docs; ++d) {
    std::string text;
    for (size_t w = 0; w < words; ++w) {
      double u = rng.uniform01();
      size_t k = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      if (k >= types) k = types - 1;
      if (!text.empty()) text.push_back(' ');
      text += "z" + std::to_string(k);
    }
    out.push_back(std::move(text));
  }
  return out;
}

}  // namespace

TEST_CASE("order-1 add-k assigns symmetric unigram mass") {
  NGramModel model = train_lm({"a b a b"}, addk_config(1));
  uint32_t a = model.lookup("a"), b = model.lookup("b");
  REQUIRE(a != NGramModel::kUnk);
  REQUIRE(b != NGramModel::kUnk);
  CHECK_THAT(model.log_prob(a, {}), WithinAbs(model.log_prob(b, {}), 1e-12));
}

TEST_CASE("training is incremental: resume equals batch") {
  NGramModel batch = train_lm({"a b c d", "c d e f"}, kn_config(3));
  NGramModel resumed(kn_config(3));
  resumed.add_document("a b c d");
  resumed.finalize();
  (void)resumed.perplexity("a b c");  // score mid-stream, then resume
  resumed.add_document("c d e f");
  resumed.finalize();
  CHECK(batch == resumed);

  NGramModel copy = resumed;
  resumed.finalize();  // empty resume: no new documents
  CHECK(copy == resumed);
}

TEST_CASE("conditional distributions sum to one within 1e-9") {
  std::vector<std::string> docs = {"a b c a b d", "b c a c c d", "d a b a"};
  for (int order : {1, 2, 3}) {
    for (bool kn : {true, false}) {
      NGramModel model = train_lm(docs, kn ? kn_config(order) : addk_config(order));
      size_t v = model.vocab_size();
      std::vector<std::vector<uint32_t>> contexts = {{}};
      if (order >= 2) {
        contexts.push_back({model.lookup("a")});
        contexts.push_back({model.lookup("d")});
        contexts.push_back({NGramModel::kBos});
        contexts.push_back({NGramModel::kUnk});
      }
      if (order >= 3) {
        contexts.push_back({model.lookup("a"), model.lookup("b")});
        contexts.push_back({NGramModel::kBos, NGramModel::kBos});
        contexts.push_back({model.lookup("c"), model.lookup("c")});
      }
      for (const auto& ctx : contexts) {
        INFO("order " << order << (kn ? " kn" : " addk") << " ctx size " << ctx.size());
        CHECK_THAT(context_mass(model, ctx, v), WithinAbs(1.0, 1e-9));
      }
    }
  }
}

TEST_CASE("lower-order counts are marginals of higher-order counts") {
  NGramModel model = train_lm(synth_texts(5, 7, 20, 50), kn_config(4));
  for (int order = 1; order < 4; ++order) {
    uint64_t lower = 0, higher = 0;
    for (const auto& [k, c] : model.raw_counts(order)) lower += c;
    for (const auto& [k, c] : model.raw_counts(order + 1)) higher += c;
    CHECK(lower == higher);
  }
}

TEST_CASE("uniform unigram model has perplexity close to vocabulary size") {
  // one document containing 1000 distinct words: every unigram count equals
  // the </s> count, so the add-k distribution is uniform over V+1 symbols
  const size_t v = 1000;
  std::string doc;
  for (size_t i = 0; i < v; ++i) {
    if (i) doc.push_back(' ');
    doc += "w" + std::to_string(i);
  }
  NGramModel model = train_lm({doc}, addk_config(1));
  double ppl = model.perplexity(doc);
  CHECK(std::abs(ppl - static_cast<double>(v)) / static_cast<double>(v) < 0.01);
}

TEST_CASE("verbatim training text scores below a shuffled-vocabulary control") {
  auto texts = synth_texts(11, 7, 10, 100);  // ~1k tokens
  NGramModel model = train_lm(texts, kn_config(5));
  std::string seen = texts[0];
  std::vector<std::string> words = split_words(seen);
  Prng rng(4242);
  rng.shuffle(words);
  std::string control;
  for (const auto& w : words) {
    if (!control.empty()) control.push_back(' ');
    control += w;
  }
  CHECK(model.perplexity(seen) < model.perplexity(control));
}

TEST_CASE("in-distribution text scores below out-of-distribution text") {
  auto train = synth_texts(21, 7, 30, 80);
  auto same_dist = synth_texts(22, 7, 5, 80);
  auto other_dist = synth_texts(22, 1234, 5, 80);  // disjoint word inventory
  NGramModel model = train_lm(train, kn_config(3));
  auto mean_ppl = [&](const std::vector<std::string>& docs) {
    double logp = 0.0;
    uint64_t n = 0;
    for (const auto& d : docs) {
      auto [lp, c] = model.accumulate_log_prob(split_words(d));
      logp += lp;
      n += c;
    }
    return std::exp(-logp / static_cast<double>(n));
  };
  CHECK(mean_ppl(same_dist) < mean_ppl(other_dist));
}

TEST_CASE("more in-distribution data lowers held-out perplexity (5/5 seeds)") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto big = zipf_texts(seed * 100, 100, 100);   // ~10k tokens
    std::vector<std::string> small(big.begin(), big.begin() + 10);  // ~1k-token prefix
    auto heldout = zipf_texts(seed * 100 + 50, 10, 100);
    // the stream is i.i.d., so probe with a unigram model: higher orders
    // would fit noise in the random contexts
    NGramModel lm_big = train_lm(big, kn_config(1));
    NGramModel lm_small = train_lm(small, kn_config(1));
    auto ppl = [&](const NGramModel& m) {
      double logp = 0.0;
      uint64_t n = 0;
      for (const auto& d : heldout) {
        auto [lp, c] = m.accumulate_log_prob(split_words(d));
        logp += lp;
        n += c;
      }
      return std::exp(-logp / static_cast<double>(n));
    };
    INFO("seed " << seed);
    CHECK(ppl(lm_big) < ppl(lm_small));
  }
}

TEST_CASE("model save/load round-trips") {
  NGramModel model = train_lm(synth_texts(31, 7, 10, 60), kn_config(4));
  auto path = (std::filesystem::temp_directory_path() / "currictl_lm_roundtrip.nglm").string();
  model.save(path);
  NGramModel back = NGramModel::load(path);
  CHECK(model == back);
  std::string probe_text = "some words the model has never seen";
  CHECK_THAT(back.perplexity(probe_text), WithinAbs(model.perplexity(probe_text), 1e-12));
}

TEST_CASE("configuration errors") {
  LmConfig bad;
  bad.order = 0;
  CHECK_THROWS_AS(NGramModel(bad), error);
  LmConfig bad_d = kn_config(2);
  bad_d.discount = 1.5;
  CHECK_THROWS_AS(NGramModel(bad_d), error);
  NGramModel empty(kn_config(2));
  CHECK_THROWS_AS(empty.perplexity("anything at all"), error);
  NGramModel trained = train_lm({"a b"}, kn_config(2));
  CHECK_THROWS_AS(trained.perplexity("   "), error);
}

TEST_CASE("perplexity is deterministic") {
  NGramModel model = train_lm(synth_texts(41, 7, 10, 60), kn_config(5));
  std::string text = synth_texts(42, 7, 1, 60)[0];
  CHECK(model.perplexity(text) == model.perplexity(text));
}
