#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "currictl/errors.hpp"
#include "json.hpp"

namespace currictl {

inline bool is_unicode_space(uint32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0a:
    case 0x0b:
    case 0x0c:
    case 0x0d:
    case 0x20:
    case 0x85:
    case 0xa0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202f:
    case 0x205f:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

// Decodes one UTF-8 code point at `pos`; advances `pos` past it. Invalid bytes
// are consumed one at a time and returned as-is (values < 0x100).
inline uint32_t decode_utf8(std::string_view s, size_t& pos) {
  unsigned char c = static_cast<unsigned char>(s[pos]);
  size_t len = 1;
  uint32_t cp = c;
  if (c >= 0xf0)
    len = 4, cp = c & 0x07;
  else if (c >= 0xe0)
    len = 3, cp = c & 0x0f;
  else if (c >= 0xc0)
    len = 2, cp = c & 0x1f;
  if (len > 1) {
    if (pos + len > s.size()) {
      ++pos;
      return c;
    }
    for (size_t i = 1; i < len; ++i) {
      unsigned char cc = static_cast<unsigned char>(s[pos + i]);
      if ((cc & 0xc0) != 0x80) {
        ++pos;
        return c;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
  }
  pos += len;
  return cp;
}

// Splits on runs of Unicode whitespace.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  size_t pos = 0, word_start = 0;
  bool in_word = false;
  while (pos < text.size()) {
    size_t here = pos;
    uint32_t cp = decode_utf8(text, pos);
    if (is_unicode_space(cp)) {
      if (in_word) {
        words.emplace_back(text.substr(word_start, here - word_start));
        in_word = false;
      }
    } else if (!in_word) {
      word_start = here;
      in_word = true;
    }
  }
  if (in_word) words.emplace_back(text.substr(word_start));
  return words;
}

struct TokenizerSpec {
  enum class Kind { whitespace, bpe };
  Kind kind = Kind::whitespace;
  std::string vocab_path;
  std::string merges_path;

  static TokenizerSpec whitespace() { return {}; }
  static TokenizerSpec bpe(std::string vocab, std::string merges) {
    TokenizerSpec s;
    s.kind = Kind::bpe;
    s.vocab_path = std::move(vocab);
    s.merges_path = std::move(merges);
    return s;
  }
};

// Word-boundary marker prepended to every non-initial word before BPE merges,
// so token streams are invertible without storing whitespace.
inline constexpr std::string_view kWordBoundary = "\xe2\x96\x81";  // U+2581

class Tokenizer {
 public:
  static Tokenizer make(const TokenizerSpec& spec) {
    Tokenizer t;
    t.kind_ = spec.kind;
    if (spec.kind == TokenizerSpec::Kind::whitespace) {
      if (!spec.vocab_path.empty() || !spec.merges_path.empty())
        fail(errc::config, "whitespace tokenizer takes no vocab/merges files");
      t.id_ = "whitespace";
      return t;
    }
    if (spec.vocab_path.empty() || spec.merges_path.empty())
      fail(errc::config, "bpe tokenizer requires both vocab and merges paths");
    t.load_vocab(spec.vocab_path);
    t.load_merges(spec.merges_path);
    t.id_ = "bpe:" + spec.vocab_path + "+" + spec.merges_path;
    return t;
  }

  const std::string& id() const { return id_; }

  std::vector<std::string> tokenize(std::string_view text) const {
    std::vector<std::string> words = split_words(text);
    if (kind_ == TokenizerSpec::Kind::whitespace) return words;
    std::vector<std::string> out;
    for (size_t w = 0; w < words.size(); ++w) {
      std::vector<std::string> symbols;
      if (w > 0) symbols.emplace_back(kWordBoundary);
      append_char_symbols(words[w], symbols);
      apply_merges(symbols);
      for (auto& s : symbols) out.push_back(std::move(s));
    }
    return out;
  }

  size_t count(std::string_view text) const { return tokenize(text).size(); }

 private:
  void load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot read vocab file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      fail(errc::data, "vocab file is not valid JSON: " + path + ": " + e.what());
    }
    if (!j.is_object()) fail(errc::data, "vocab file must be a JSON object: " + path);
    for (auto& [tok, id] : j.items()) vocab_.emplace(tok, id.get<uint32_t>());
  }

  void load_merges(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot read merges file: " + path);
    std::string line;
    uint32_t rank = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      size_t sp = line.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 == line.size())
        fail(errc::data, "merges line " + std::to_string(rank + 1) + " is not a pair: " + line);
      merges_.emplace(line.substr(0, sp) + "\x01" + line.substr(sp + 1), rank);
      ++rank;
    }
  }

  // One symbol per code point; code points absent from the vocab fall back to
  // per-byte <0xNN> symbols so encoding never fails.
  void append_char_symbols(std::string_view word, std::vector<std::string>& symbols) const {
    size_t pos = 0;
    while (pos < word.size()) {
      size_t start = pos;
      decode_utf8(word, pos);
      std::string sym(word.substr(start, pos - start));
      if (vocab_.count(sym)) {
        symbols.push_back(std::move(sym));
      } else {
        static const char* k = "0123456789ABCDEF";
        for (size_t i = start; i < pos; ++i) {
          unsigned char b = static_cast<unsigned char>(word[i]);
          std::string bs = "<0x";
          bs.push_back(k[b >> 4]);
          bs.push_back(k[b & 0xf]);
          bs.push_back('>');
          symbols.push_back(std::move(bs));
        }
      }
    }
  }

  void apply_merges(std::vector<std::string>& symbols) const {
    if (merges_.empty()) return;
    while (symbols.size() > 1) {
      uint32_t best_rank = std::numeric_limits<uint32_t>::max();
      size_t best_i = 0;
      for (size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = merges_.find(symbols[i] + "\x01" + symbols[i + 1]);
        if (it != merges_.end() && it->second < best_rank) {
          best_rank = it->second;
          best_i = i;
        }
      }
      if (best_rank == std::numeric_limits<uint32_t>::max()) break;
      symbols[best_i] += symbols[best_i + 1];
      symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_i) + 1);
    }
  }

  TokenizerSpec::Kind kind_ = TokenizerSpec::Kind::whitespace;
  std::string id_;
  std::unordered_map<std::string, uint32_t> vocab_;
  std::unordered_map<std::string, uint32_t> merges_;
};

}  // namespace currictl
