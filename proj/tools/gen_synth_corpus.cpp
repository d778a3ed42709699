// Deterministic synthetic-corpus generator for examples and benchmarks.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "currictl/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a deterministic synthetic JSONL corpus"};
  currictl::SynthConfig cfg;
  std::string out;
  app.add_option("--out", out, "output JSONL path")->required();
  app.add_option("--docs", cfg.docs, "number of documents");
  app.add_option("--min-words", cfg.min_words, "minimum words per document");
  app.add_option("--max-words", cfg.max_words, "maximum words per document");
  app.add_option("--seed", cfg.seed, "document stream seed");
  app.add_option("--pool-seed", cfg.pool_seed, "word inventory seed");
  app.add_option("--id-prefix", cfg.id_prefix, "document id prefix");
  CLI11_PARSE(app, argc, argv);

  try {
    currictl::SynthCorpus synth(cfg);
    auto docs = synth.generate();
    currictl::SynthCorpus::write_jsonl(docs, out);
    std::printf("wrote %zu documents to %s\n", docs.size(), out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
