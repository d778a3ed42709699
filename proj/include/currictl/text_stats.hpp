#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "currictl/errors.hpp"
#include "currictl/tokenizer.hpp"

namespace currictl {

struct TextStats {
  uint64_t words = 0;
  uint64_t sentences = 0;
  uint64_t syllables = 0;
  uint64_t characters = 0;      // letters only
  uint64_t complex_words = 0;   // words with >= 3 syllables
  uint64_t tokens = 0;          // subword tokens under the active tokenizer
  uint64_t difficult_words = 0; // words absent from the easy-word list (0 if no list)
};

inline bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// Maximal [aeiouy] groups over the word's ASCII letters, silent trailing "e"
// removed unless the word ends in consonant+"le". Always >= 1.
inline uint64_t syllable_count(std::string_view word) {
  std::string letters;
  letters.reserve(word.size());
  for (char c : word)
    if (is_ascii_letter(c)) letters.push_back(static_cast<char>(std::tolower(c)));
  if (letters.empty()) return 1;

  auto is_vowel = [](char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; };
  uint64_t groups = 0;
  bool in_group = false;
  for (char c : letters) {
    if (is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  size_t n = letters.size();
  bool silent_e = n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]);
  bool le_ending = n >= 3 && letters[n - 1] == 'e' && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
  if (silent_e && !le_ending && groups > 1) --groups;
  return groups == 0 ? 1 : groups;
}

// Sentence terminators are ., !, ? followed by whitespace or end of text.
// Non-empty text is always at least one sentence.
inline uint64_t count_sentences(std::string_view text) {
  uint64_t sentences = 0;
  bool tail = false;  // non-space content since the last terminator
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      bool at_break = i + 1 >= text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
      if (at_break && tail) {
        ++sentences;
        tail = false;
      }
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      tail = true;
    }
  }
  if (tail) ++sentences;
  return sentences == 0 ? 1 : sentences;
}

class DaleChallList {
 public:
  static DaleChallList load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::config, "cannot read easy-word list: " + path);
    DaleChallList list;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) list.words_.insert(line);
    }
    if (list.words_.empty()) fail(errc::config, "easy-word list is empty: " + path);
    return list;
  }

  bool contains(std::string_view word) const {
    std::string w;
    w.reserve(word.size());
    for (char c : word)
      if (is_ascii_letter(c) || c == '\'') w.push_back(static_cast<char>(std::tolower(c)));
    return words_.count(w) > 0;
  }

 private:
  std::unordered_set<std::string> words_;
};

inline TextStats compute_text_stats(std::string_view text, const Tokenizer& tokenizer,
                                    const DaleChallList* easy_words = nullptr) {
  TextStats stats;
  std::vector<std::string> words = split_words(text);
  stats.words = words.size();
  stats.sentences = count_sentences(text);
  for (const auto& w : words) {
    uint64_t syl = syllable_count(w);
    stats.syllables += syl;
    if (syl >= 3) ++stats.complex_words;
    for (char c : w)
      if (is_ascii_letter(c)) ++stats.characters;
    if (easy_words && !easy_words->contains(w)) ++stats.difficult_words;
  }
  stats.tokens = tokenizer.count(text);
  return stats;
}

}  // namespace currictl
