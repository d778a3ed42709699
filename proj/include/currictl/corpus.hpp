#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "currictl/errors.hpp"
#include "currictl/hash.hpp"
#include "currictl/tokenizer.hpp"
#include "json.hpp"

namespace currictl {

struct Document {
  std::string id;
  std::string text;
  uint64_t byte_len = 0;
};

struct Corpus {
  std::vector<Document> docs;                   // file order, then line order
  std::vector<uint64_t> token_counts;           // parallel to docs
  uint64_t malformed_count = 0;
  uint64_t duplicate_count = 0;
  uint64_t empty_count = 0;
};

struct CorpusManifest {
  std::vector<std::string> shard_paths;
  uint64_t doc_count = 0;
  uint64_t token_count = 0;
  std::string tokenizer_id;
  std::string content_hash;

  nlohmann::json to_json() const {
    // nlohmann objects keep keys sorted, which gives the canonical layout
    nlohmann::json j;
    j["content_hash"] = content_hash;
    j["doc_count"] = doc_count;
    j["shard_paths"] = shard_paths;
    j["token_count"] = token_count;
    j["tokenizer_id"] = tokenizer_id;
    return j;
  }

  static CorpusManifest from_json(const nlohmann::json& j) {
    CorpusManifest m;
    m.content_hash = j.at("content_hash").get<std::string>();
    m.doc_count = j.at("doc_count").get<uint64_t>();
    m.shard_paths = j.at("shard_paths").get<std::vector<std::string>>();
    m.token_count = j.at("token_count").get<uint64_t>();
    m.tokenizer_id = j.at("tokenizer_id").get<std::string>();
    return m;
  }
};

namespace detail {
inline bool text_is_blank(std::string_view text) {
  size_t pos = 0;
  while (pos < text.size()) {
    if (!is_unicode_space(decode_utf8(text, pos))) return false;
  }
  return true;
}
}  // namespace detail

// Reads newline-delimited JSON records with `id` and `text`. Malformed lines
// and duplicate ids are counted and skipped; documents with empty text are
// dropped (no metric is defined on them).
inline Corpus read_corpus(const std::vector<std::string>& paths, const Tokenizer& tokenizer) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot read corpus file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text") ||
          !j["id"].is_string() || !j["text"].is_string()) {
        ++corpus.malformed_count;
        continue;
      }
      Document doc;
      doc.id = j["id"].get<std::string>();
      doc.text = j["text"].get<std::string>();
      doc.byte_len = doc.text.size();
      if (doc.id.empty()) {
        ++corpus.malformed_count;
        continue;
      }
      if (detail::text_is_blank(doc.text)) {
        ++corpus.empty_count;
        continue;
      }
      if (!seen.insert(doc.id).second) {
        ++corpus.duplicate_count;  // first occurrence wins
        continue;
      }
      corpus.token_counts.push_back(tokenizer.count(doc.text));
      corpus.docs.push_back(std::move(doc));
    }
  }
  if (corpus.docs.empty()) fail(errc::data, "no valid documents in corpus");
  return corpus;
}

inline std::string corpus_content_hash(const Corpus& corpus) {
  Sha256 h;
  for (const auto& doc : corpus.docs) {
    h.update(doc.id);
    h.update(std::string_view("\0", 1));
    h.update(doc.text);
    h.update("\n");
  }
  return h.hex();
}

inline CorpusManifest ingest(const std::vector<std::string>& paths, const Tokenizer& tokenizer,
                             const Corpus& corpus) {
  CorpusManifest m;
  m.shard_paths = paths;
  m.doc_count = corpus.docs.size();
  for (uint64_t c : corpus.token_counts) m.token_count += c;
  m.tokenizer_id = tokenizer.id();
  m.content_hash = corpus_content_hash(corpus);
  return m;
}

inline CorpusManifest ingest(const std::vector<std::string>& paths, const Tokenizer& tokenizer) {
  Corpus corpus = read_corpus(paths, tokenizer);
  return ingest(paths, tokenizer, corpus);
}

inline void write_manifest(const CorpusManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io, "cannot write manifest: " + path);
  out << m.to_json().dump(2) << "\n";
}

}  // namespace currictl
