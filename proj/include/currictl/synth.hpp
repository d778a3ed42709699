#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "currictl/corpus.hpp"
#include "currictl/prng.hpp"

namespace currictl {

// Synthetic corpus with independent difficulty dimensions per document:
// sentence length, complex-word fraction, vocabulary window, and rare-word
// rate. Construction is fully seeded, so generated corpora are bit-identical
// across machines.
struct SynthConfig {
  uint64_t seed = 1;
  uint64_t pool_seed = 7;  // word inventory; change to get a disjoint "language"
  size_t docs = 200;
  size_t min_words = 150;
  size_t max_words = 350;
  std::string id_prefix = "doc";
};

class SynthCorpus {
 public:
  explicit SynthCorpus(const SynthConfig& cfg) : cfg_(cfg) { build_pools(); }

  std::vector<Document> generate() const {
    std::vector<Document> docs;
    docs.reserve(cfg_.docs);
    for (size_t d = 0; d < cfg_.docs; ++d) {
      Prng rng(derive_seed(cfg_.seed, "synth-doc", d));
      Document doc;
      doc.id = cfg_.id_prefix + "-" + zero_pad(d);
      doc.text = make_text(rng);
      doc.byte_len = doc.text.size();
      docs.push_back(std::move(doc));
    }
    return docs;
  }

  static void write_jsonl(const std::vector<Document>& docs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write corpus: " + path);
    for (const auto& doc : docs) {
      nlohmann::json j;
      j["id"] = doc.id;
      j["text"] = doc.text;
      out << j.dump() << "\n";
    }
  }

 private:
  static std::string zero_pad(size_t n) {
    std::string s = std::to_string(n);
    while (s.size() < 6) s.insert(s.begin(), '0');
    return s;
  }

  // Every syllable unit is onset+vowel+coda, so the counted syllables of a
  // generated word equal its unit count.
  static std::string make_unit(Prng& rng) {
    static constexpr char onsets[] = "bdfghklmnprstvwz";
    static constexpr char vowels[] = "aeiou";
    static constexpr char codas[] = "bdklmnprst";
    std::string u;
    u.push_back(onsets[rng.uniform_below(16)]);
    u.push_back(vowels[rng.uniform_below(5)]);
    u.push_back(codas[rng.uniform_below(10)]);
    return u;
  }

  static std::string make_word(Prng& rng, size_t units) {
    std::string w;
    for (size_t i = 0; i < units; ++i) w += make_unit(rng);
    return w;
  }

  void build_pools() {
    Prng rng(derive_seed(cfg_.pool_seed, "synth-pools"));
    auto fill = [&](std::vector<std::string>& pool, size_t count, size_t min_units,
                    size_t max_units) {
      while (pool.size() < count) {
        size_t units = min_units + rng.uniform_below(max_units - min_units + 1);
        pool.push_back(make_word(rng, units));
      }
    };
    fill(simple_, 400, 1, 2);
    fill(complex_, 400, 3, 5);
    fill(rare_simple_, 4000, 1, 2);
    fill(rare_complex_, 4000, 3, 5);
  }

  std::string make_text(Prng& rng) const {
    size_t words = cfg_.min_words + rng.uniform_below(cfg_.max_words - cfg_.min_words + 1);
    double sentence_len = 4.0 + rng.uniform01() * 22.0;   // mean words per sentence
    double complex_frac = 0.05 + rng.uniform01() * 0.85;  // share of >=3-syllable words
    double rare_rate = rng.uniform01() * 0.30;            // share of rare-vocabulary words
    double window_frac = 0.05 + rng.uniform01() * 0.95;   // active slice of each pool
    size_t win_simple = std::max<size_t>(8, static_cast<size_t>(window_frac * simple_.size()));
    size_t win_complex = std::max<size_t>(8, static_cast<size_t>(window_frac * complex_.size()));
    size_t off_simple = rng.uniform_below(simple_.size() - win_simple + 1);
    size_t off_complex = rng.uniform_below(complex_.size() - win_complex + 1);

    std::string text;
    text.reserve(words * 8);
    size_t in_sentence = 0;
    size_t target = sentence_words(rng, sentence_len);
    for (size_t w = 0; w < words; ++w) {
      bool complex_word = rng.uniform01() < complex_frac;
      const std::string* word;
      if (rng.uniform01() < rare_rate) {
        const auto& pool = complex_word ? rare_complex_ : rare_simple_;
        word = &pool[rng.uniform_below(pool.size())];
      } else if (complex_word) {
        word = &complex_[off_complex + rng.uniform_below(win_complex)];
      } else {
        word = &simple_[off_simple + rng.uniform_below(win_simple)];
      }
      if (!text.empty()) text.push_back(' ');
      text += *word;
      if (++in_sentence >= target || w + 1 == words) {
        text.push_back('.');
        in_sentence = 0;
        target = sentence_words(rng, sentence_len);
      }
    }
    return text;
  }

  static size_t sentence_words(Prng& rng, double mean) {
    double jitter = 0.6 + 0.8 * rng.uniform01();  // +-40% around the doc mean
    size_t len = static_cast<size_t>(mean * jitter);
    return len < 2 ? 2 : len;
  }

  SynthConfig cfg_;
  std::vector<std::string> simple_;
  std::vector<std::string> complex_;
  std::vector<std::string> rare_simple_;
  std::vector<std::string> rare_complex_;
};

}  // namespace currictl
