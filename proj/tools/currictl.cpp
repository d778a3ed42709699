// Command-line front end: score -> correlate -> plan -> build -> probe -> report.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "currictl/analysis.hpp"
#include "currictl/builder.hpp"
#include "currictl/corpus.hpp"
#include "currictl/metrics.hpp"
#include "currictl/ngram_lm.hpp"
#include "currictl/probe.hpp"
#include "currictl/scheduler.hpp"
#include "currictl/score_table.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace currictl;

namespace {

int exit_code_for(errc kind) {
  switch (kind) {
    case errc::usage:
      return 1;
    case errc::config:
    case errc::undefined_correlation:
      return 3;
    default:
      return 2;  // data integrity / io / degenerate inputs
  }
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot read " + path);
  Sha256 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h.update(std::string_view(buf, static_cast<size_t>(in.gcount())));
  return h.hex();
}

// Every run leaves a run.json with the resolved configuration and input
// hashes; reruns from it are bit-identical.
void write_run_json(const std::string& out_dir, const std::string& subcommand,
                    nlohmann::json config, const std::vector<std::string>& input_files) {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["config"] = std::move(config);
  nlohmann::json hashes;
  for (const auto& f : input_files) hashes[f] = file_sha256(f);
  j["input_hashes"] = hashes;
  std::ofstream out(out_dir + "/run.json", std::ios::binary);
  if (!out) fail(errc::io, "cannot write run.json in " + out_dir);
  out << j.dump(2) << "\n";
}

std::vector<MetricId> parse_metric_list(const std::string& spec) {
  std::vector<MetricId> out;
  if (spec == "all") {
    for (MetricId m : all_metrics()) out.push_back(m);
    return out;
  }
  if (spec == "selected") {
    out.assign(kSelectedMetrics.begin(), kSelectedMetrics.end());
    return out;
  }
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) out.push_back(parse_metric(name));
  if (out.empty()) fail(errc::usage, "empty metric list");
  return out;
}

struct TokenizerArgs {
  std::string kind = "whitespace";
  std::string vocab;
  std::string merges;

  TokenizerSpec spec() const {
    if (kind == "whitespace") return TokenizerSpec::whitespace();
    if (kind == "bpe") return TokenizerSpec::bpe(vocab, merges);
    fail(errc::usage, "unknown tokenizer kind: " + kind);
  }
};

struct LmArgs {
  int order = 5;
  std::string smoothing = "kneser_ney";
  double discount = 0.75;
  double k = 0.01;
  double train_frac = 0.05;

  LmConfig config() const {
    LmConfig cfg;
    cfg.order = order;
    if (smoothing == "kneser_ney")
      cfg.smoothing = LmConfig::Smoothing::kneser_ney;
    else if (smoothing == "add_k")
      cfg.smoothing = LmConfig::Smoothing::add_k;
    else
      fail(errc::usage, "unknown smoothing: " + smoothing);
    cfg.discount = discount;
    cfg.k = k;
    return cfg;
  }
};

std::vector<Document> docs_by_id(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < corpus.docs.size(); ++i) index[corpus.docs[i].id] = i;
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) fail(errc::data, "doc id not found in corpus: " + id);
    out.push_back(corpus.docs[it->second]);
  }
  return out;
}

NGramModel train_scorer_lm(const Corpus& corpus, const LmArgs& lm_args, uint64_t seed) {
  size_t train_docs = std::max<size_t>(
      1, static_cast<size_t>(std::llround(lm_args.train_frac * corpus.docs.size())));
  if (train_docs >= corpus.docs.size()) train_docs = corpus.docs.size();
  std::vector<size_t> idx(corpus.docs.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  Prng rng(derive_seed(seed, "lm-train"));
  rng.shuffle(idx);
  NGramModel model(lm_args.config());
  for (size_t i = 0; i < train_docs; ++i) model.add_document(corpus.docs[idx[i]].text);
  model.finalize();
  return model;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curriculum scoring and ordering pipeline"};
  app.require_subcommand(1);

  // --- score ---
  auto* score = app.add_subcommand("score", "compute difficulty metrics over a corpus");
  std::vector<std::string> sc_corpus;
  std::string sc_out, sc_metrics = "selected", sc_dale;
  TokenizerArgs sc_tok;
  LmArgs sc_lm;
  unsigned sc_threads = 1;
  uint64_t sc_seed = 0;
  score->add_option("--corpus", sc_corpus, "input JSONL files")->required();
  score->add_option("--out", sc_out, "output directory")->required();
  score->add_option("--metrics", sc_metrics, "comma list, or 'all' / 'selected'");
  score->add_option("--tokenizer", sc_tok.kind, "whitespace|bpe");
  score->add_option("--vocab", sc_tok.vocab, "BPE vocab JSON");
  score->add_option("--merges", sc_tok.merges, "BPE merges file");
  score->add_option("--dale-chall", sc_dale, "easy-word list for dale_chall");
  score->add_option("--lm-order", sc_lm.order, "perplexity scorer n-gram order");
  score->add_option("--lm-smoothing", sc_lm.smoothing, "kneser_ney|add_k");
  score->add_option("--lm-train-frac", sc_lm.train_frac, "corpus fraction used to train scorer LM");
  score->add_option("--threads", sc_threads, "worker threads")->envname("CURRICTL_THREADS");
  score->add_option("--seed", sc_seed, "run seed")->envname("CURRICTL_SEED");

  // --- correlate ---
  auto* correlate = app.add_subcommand("correlate", "Spearman correlation matrix over metrics");
  std::string co_scores, co_out, co_metrics = "all";
  uint64_t co_sample = 0, co_seed = 0;
  correlate->add_option("--scores", co_scores, "score table CSV")->required();
  correlate->add_option("--out", co_out, "output directory")->required();
  correlate->add_option("--metrics", co_metrics, "comma list, or 'all' / 'selected'");
  correlate->add_option("--sample-docs", co_sample, "uniform row subsample size (0 = all)");
  correlate->add_option("--seed", co_seed, "sampling seed")->envname("CURRICTL_SEED");

  // --- plan ---
  auto* plan_cmd = app.add_subcommand("plan", "write a curriculum plan file");
  std::string pl_strategy = "vanilla", pl_metric = "mtld", pl_pacing = "linear";
  std::string pl_grouping = "equal_tokens", pl_inner_strategy = "vanilla",
              pl_inner_pacing = "linear", pl_out;
  int pl_n = 10, pl_i = 10;
  uint64_t pl_t = 0, pl_t1 = 0, pl_t2 = 0, pl_seed = 0;
  plan_cmd->add_option("--strategy", pl_strategy,
                       "vanilla|paced|interleaved|shuffled_baseline|warmup");
  plan_cmd->add_option("--metric", pl_metric, "difficulty metric id");
  plan_cmd->add_option("--pacing", pl_pacing, "linear|quadratic|inverse_quadratic");
  plan_cmd->add_option("--N", pl_n, "difficulty group count");
  plan_cmd->add_option("--I", pl_i, "interleave count");
  plan_cmd->add_option("--grouping", pl_grouping, "equal_tokens|equal_docs");
  plan_cmd->add_option("--T", pl_t, "token budget");
  plan_cmd->add_option("--T1", pl_t1, "warmup phase budget");
  plan_cmd->add_option("--T2", pl_t2, "continuation phase budget");
  plan_cmd->add_option("--inner-strategy", pl_inner_strategy, "warmup inner strategy");
  plan_cmd->add_option("--inner-pacing", pl_inner_pacing, "warmup inner pacing");
  plan_cmd->add_option("--seed", pl_seed, "plan seed")->envname("CURRICTL_SEED");
  plan_cmd->add_option("--out", pl_out, "plan JSON path")->required();

  // --- build ---
  auto* build = app.add_subcommand("build", "materialize a plan into ordered shards");
  std::string bu_plan, bu_scores, bu_out;
  std::vector<std::string> bu_corpus;
  uint64_t bu_shard_tokens = 0;
  TokenizerArgs bu_tok;
  build->add_option("--plan", bu_plan, "plan JSON")->required();
  build->add_option("--scores", bu_scores, "score table CSV")->required();
  build->add_option("--corpus", bu_corpus, "input JSONL files (omit to emit manifest only)");
  build->add_option("--tokenizer", bu_tok.kind, "whitespace|bpe");
  build->add_option("--vocab", bu_tok.vocab, "BPE vocab JSON");
  build->add_option("--merges", bu_tok.merges, "BPE merges file");
  build->add_option("--shard-tokens", bu_shard_tokens, "tokens per output shard");
  build->add_option("--out", bu_out, "output directory")->required();

  // --- probe ---
  auto* probe_cmd = app.add_subcommand("probe", "train the proxy LM along an order");
  std::string pr_order, pr_heldout, pr_out, pr_label = "probe";
  std::vector<std::string> pr_corpus;
  uint64_t pr_checkpoint = 0, pr_heldout_count = 0, pr_seed = 0;
  LmArgs pr_lm;
  pr_lm.order = 3;
  probe_cmd->add_option("--order", pr_order, "order manifest JSON")->required();
  probe_cmd->add_option("--corpus", pr_corpus, "input JSONL files")->required();
  probe_cmd->add_option("--heldout", pr_heldout, "held-out JSONL file");
  probe_cmd->add_option("--heldout-count", pr_heldout_count,
                        "sample this many held-out docs from the corpus");
  probe_cmd->add_option("--checkpoint-tokens", pr_checkpoint, "checkpoint interval")->required();
  probe_cmd->add_option("--lm-order", pr_lm.order, "probe n-gram order");
  probe_cmd->add_option("--lm-smoothing", pr_lm.smoothing, "kneser_ney|add_k");
  probe_cmd->add_option("--label", pr_label, "trajectory label");
  probe_cmd->add_option("--seed", pr_seed, "probe seed")->envname("CURRICTL_SEED");
  probe_cmd->add_option("--out", pr_out, "output directory")->required();

  // --- report ---
  auto* report = app.add_subcommand("report", "timing table and savings statistic");
  std::string re_timing, re_baseline, re_cl, re_out;
  report->add_option("--timing", re_timing, "timing CSV from a score run");
  report->add_option("--baseline", re_baseline, "baseline trajectory CSV");
  report->add_option("--cl", re_cl, "curriculum trajectory CSV");
  report->add_option("--out", re_out, "optional output directory for savings.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // command-line misuse is always exit 1
  }

  try {
    if (*score) {
      fs::create_directories(sc_out);
      Tokenizer tokenizer = Tokenizer::make(sc_tok.spec());
      Corpus corpus = read_corpus(sc_corpus, tokenizer);
      CorpusManifest manifest = ingest(sc_corpus, tokenizer, corpus);
      write_manifest(manifest, sc_out + "/corpus_manifest.json");
      if (corpus.malformed_count || corpus.duplicate_count || corpus.empty_count)
        std::cerr << "warning: skipped " << corpus.malformed_count << " malformed, "
                  << corpus.duplicate_count << " duplicate, " << corpus.empty_count
                  << " empty documents\n";

      std::vector<MetricId> metrics = parse_metric_list(sc_metrics);
      bool wants_ppl = false, wants_dale = false;
      for (MetricId m : metrics) {
        wants_ppl = wants_ppl || m == MetricId::perplexity;
        wants_dale = wants_dale || m == MetricId::dale_chall;
      }
      std::optional<NGramModel> lm;
      if (wants_ppl) lm.emplace(train_scorer_lm(corpus, sc_lm, sc_seed));
      std::optional<DaleChallList> dale;
      if (wants_dale) {
        if (sc_dale.empty()) fail(errc::config, "--dale-chall is required for dale_chall");
        dale.emplace(DaleChallList::load(sc_dale));
      }
      ScoreReport rpt;
      ScoreTable table = score_corpus(corpus, metrics, tokenizer, lm ? &*lm : nullptr, &rpt,
                                      sc_threads, dale ? &*dale : nullptr);
      if (table.doc_order.empty()) fail(errc::data, "no documents survived scoring");
      write_scores(table, sc_out + "/scores.csv");
      rpt.write_timing_csv(sc_out + "/timing.csv");
      rpt.write_error_log(sc_out + "/errors.log");

      nlohmann::json cfg;
      cfg["metrics"] = sc_metrics;
      cfg["tokenizer"] = sc_tok.kind;
      cfg["lm_order"] = sc_lm.order;
      cfg["lm_smoothing"] = sc_lm.smoothing;
      cfg["lm_train_frac"] = sc_lm.train_frac;
      cfg["seed"] = sc_seed;
      cfg["threads"] = sc_threads;
      write_run_json(sc_out, "score", cfg, sc_corpus);
      std::cout << "scored " << table.doc_order.size() << " docs, " << rpt.errors.size()
                << " metric failures, " << format_double(rpt.wall_seconds) << "s\n";
    } else if (*correlate) {
      fs::create_directories(co_out);
      ScoreTable table = read_scores(co_scores);
      if (co_sample > 0 && co_sample < table.doc_order.size()) {
        std::vector<std::string> keep = table.doc_order;
        Prng rng(derive_seed(co_seed, "correlate-sample"));
        rng.shuffle(keep);
        keep.resize(co_sample);
        std::sort(keep.begin(), keep.end());
        ScoreTable sampled;
        sampled.metrics = table.metrics;
        for (const auto& id : table.doc_order) {
          if (std::binary_search(keep.begin(), keep.end(), id))
            sampled.add_row(id, table.token_counts.at(id), table.rows.at(id));
        }
        table = std::move(sampled);
      }
      CorrelationMatrix m = correlation_matrix(table, parse_metric_list(co_metrics));
      export_heatmap_csv(m, co_out + "/correlation.csv");
      std::ofstream js(co_out + "/correlation.json", std::ios::binary);
      js << m.to_json().dump(2) << "\n";
      nlohmann::json cfg;
      cfg["metrics"] = co_metrics;
      cfg["sample_docs"] = co_sample;
      cfg["seed"] = co_seed;
      write_run_json(co_out, "correlate", cfg, {co_scores});
      std::cout << "correlation over " << m.surviving_rows << " rows\n";
    } else if (*plan_cmd) {
      CurriculumPlan plan;
      plan.metric_id = parse_metric(pl_metric);
      plan.pacing = parse_pacing(pl_pacing);
      plan.group_count = pl_n;
      plan.interleaves = pl_i;
      plan.grouping =
          pl_grouping == "equal_docs" ? GroupingMode::equal_docs : GroupingMode::equal_tokens;
      plan.seed = pl_seed;
      auto strategy = CurriculumPlan::parse_strategy(pl_strategy);
      if (strategy == CurriculumPlan::Strategy::warmup) {
        CurriculumPlan inner = plan;
        inner.strategy = CurriculumPlan::parse_strategy(pl_inner_strategy);
        inner.pacing = parse_pacing(pl_inner_pacing);
        inner.budget = pl_t1;
        plan = compose_warmup(inner, pl_t1, pl_t2);
      } else {
        plan.strategy = strategy;
        plan.budget = pl_t;
      }
      plan.validate();
      write_plan(plan, pl_out);
      std::cout << "wrote plan " << pl_out << "\n";
    } else if (*build) {
      fs::create_directories(bu_out);
      CurriculumPlan plan = read_plan(bu_plan);
      ScoreTable table = read_scores(bu_scores);
      PolarityRegistry polarity;
      OrderManifest manifest = build_plan(plan, table, polarity);
      write_manifest(manifest, bu_out + "/order_manifest.json");
      std::vector<std::string> inputs = {bu_plan, bu_scores};
      if (!bu_corpus.empty()) {
        Tokenizer tokenizer = Tokenizer::make(bu_tok.spec());
        Corpus corpus = read_corpus(bu_corpus, tokenizer);
        uint64_t shard_tokens = bu_shard_tokens ? bu_shard_tokens : manifest.total_tokens;
        emit_shards(manifest, corpus, shard_tokens, bu_out);
        inputs.insert(inputs.end(), bu_corpus.begin(), bu_corpus.end());
      }
      nlohmann::json cfg;
      cfg["shard_tokens"] = bu_shard_tokens;
      write_run_json(bu_out, "build", cfg, inputs);
      std::cout << "order_hash " << manifest.order_hash << " total_tokens "
                << manifest.total_tokens << "\n";
    } else if (*probe_cmd) {
      fs::create_directories(pr_out);
      Tokenizer tokenizer = Tokenizer::make(TokenizerSpec::whitespace());
      OrderManifest manifest = read_order_manifest(pr_order);
      Corpus corpus = read_corpus(pr_corpus, tokenizer);
      std::vector<Document> heldout;
      if (!pr_heldout.empty()) {
        Corpus h = read_corpus({pr_heldout}, tokenizer);
        heldout = h.docs;
      } else if (pr_heldout_count > 0) {
        // sample only from documents outside the training order, or the
        // probe's leakage check would abort the run
        std::unordered_set<std::string> in_order(manifest.sequence.begin(),
                                                 manifest.sequence.end());
        std::vector<std::string> ids;
        for (const auto& d : corpus.docs)
          if (!in_order.count(d.id)) ids.push_back(d.id);
        if (ids.size() <= pr_heldout_count)
          fail(errc::data, "not enough documents outside the training order for --heldout-count");
        heldout = docs_by_id(corpus, sample_heldout_ids(ids, pr_heldout_count, pr_seed));
      } else {
        fail(errc::usage, "probe requires --heldout or --heldout-count");
      }
      std::vector<Document> ordered = docs_by_id(corpus, manifest.sequence);
      Trajectory traj =
          run_probe(ordered, heldout, pr_checkpoint, pr_lm.config(), pr_seed, pr_label);
      traj.write_csv(pr_out + "/trajectory.csv");
      nlohmann::json cfg;
      cfg["checkpoint_tokens"] = pr_checkpoint;
      cfg["lm_order"] = pr_lm.order;
      cfg["lm_smoothing"] = pr_lm.smoothing;
      cfg["seed"] = pr_seed;
      cfg["label"] = pr_label;
      std::vector<std::string> inputs = pr_corpus;
      inputs.push_back(pr_order);
      if (!pr_heldout.empty()) inputs.push_back(pr_heldout);
      write_run_json(pr_out, "probe", cfg, inputs);
      std::cout << "trajectory with " << traj.checkpoints.size() << " checkpoints\n";
    } else if (*report) {
      if (!re_timing.empty()) {
        std::ifstream in(re_timing);
        if (!in) fail(errc::io, "cannot read timing csv: " + re_timing);
        std::string line;
        std::getline(in, line);  // header
        std::cout << "metric            docs        time\n";
        double total = 0.0;
        while (std::getline(in, line)) {
          std::stringstream ss(line);
          std::string metric, docs, seconds, rate;
          std::getline(ss, metric, ',');
          std::getline(ss, docs, ',');
          std::getline(ss, seconds, ',');
          std::getline(ss, rate, ',');
          double sec = parse_double(seconds, re_timing);
          total += sec;
          double half_minutes = std::ceil(sec / 30.0) * 0.5;  // rounded up to 0.5 min
          std::printf("%-16s %7s %8.1f min\n", metric.c_str(), docs.c_str(), half_minutes);
        }
        std::printf("%-16s %7s %8.1f min\n", "total", "",
                    std::ceil(total / 30.0) * 0.5);
      }
      if (!re_baseline.empty() || !re_cl.empty()) {
        if (re_baseline.empty() || re_cl.empty())
          fail(errc::usage, "savings needs both --baseline and --cl");
        Trajectory base = Trajectory::read_csv(re_baseline);
        Trajectory cl = Trajectory::read_csv(re_cl);
        // realized budgets differ by a few documents between orders, so the
        // final partial checkpoints rarely align; compare on the shared grid
        size_t shared = 0;
        while (shared < base.checkpoints.size() && shared < cl.checkpoints.size() &&
               base.checkpoints[shared].tokens_seen == cl.checkpoints[shared].tokens_seen)
          ++shared;
        if (shared == 0) fail(errc::data, "trajectories share no checkpoints");
        base.checkpoints.resize(shared);
        cl.checkpoints.resize(shared);
        SavingsReport rep = savings(cl, base);
        std::string dump = rep.to_json().dump(2);
        std::cout << dump << "\n";
        if (!re_out.empty()) {
          fs::create_directories(re_out);
          std::ofstream out(re_out + "/savings.json", std::ios::binary);
          out << dump << "\n";
          nlohmann::json cfg;
          write_run_json(re_out, "report", cfg, {re_baseline, re_cl});
        }
      }
      if (re_timing.empty() && re_baseline.empty() && re_cl.empty())
        fail(errc::usage, "report needs --timing and/or --baseline/--cl");
    }
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
