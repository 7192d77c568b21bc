// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/cli/pipeline.hpp"

#include <fstream>
#include <ostream>

#include "ragdx/analysis/analysis.hpp"
#include "ragdx/fusion/rerank.hpp"
#include "ragdx/index/index_io.hpp"

namespace ragdx {

namespace fs = std::filesystem;

namespace {

const fs::path kCorpusDir = "corpus";
const fs::path kIndexFile = "index.rgdx";
const fs::path kHeadsDir = "heads";
const fs::path kHistoryFile = "loss_history.jsonl";
const fs::path kPredsDir = "preds";
const fs::path kChoicesFile = "choices.jsonl";

fs::path dump_path(const std::string& name) { return kPredsDir / (name + ".jsonl"); }

std::vector<PredictionRecord> to_records(const std::vector<FusedPrediction>& preds,
                                         const std::vector<Query>& queries) {
  std::vector<PredictionRecord> out;
  out.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) out.push_back(to_record(preds[i], queries[i]));
  return out;
}

}  // namespace

const std::vector<std::string>& pipeline_dumps() {
  static const std::vector<std::string> names{
      "untrained_fused", "fused",        "top1",           "max_confidence",   "mean_confidence",
      "reranked",        "no_retrieval", "no_query_image", "random_retrieval",
  };
  return names;
}

HeadPair load_heads(const fs::path& dir, std::size_t dimension) {
  if (dir.empty()) return HeadPair::identity(dimension);
  HeadPair heads{read_head(dir / "text.rgph"), read_head(dir / "image.rgph")};
  if (heads.text.head != Head::text || heads.image.head != Head::image) {
    fail(Errc::InvalidArgument, "head files in " + dir.string() + " are swapped");
  }
  if (heads.text.dimension() != dimension || heads.image.dimension() != dimension) {
    fail(Errc::DimensionMismatch, "heads in " + dir.string() + " do not match the index dimension");
  }
  return heads;
}

std::vector<fs::path> synth_stage(const RunConfig& config, const fs::path& dir) {
  SynthCorpus corpus = generate(config.synth);
  if (config.inject_rate > 0.0) {
    const ReaderHandle reader = make_reader(config, corpus.queries.front().vocab);
    InjectOptions opts;
    opts.k = config.k;
    opts.merge = config.merge;
    opts.seed = config.seed;
    opts.reader = reader.reader.get();
    InjectionResult inj = inject_inconsistency(corpus.index, corpus.queries, config.inject_rate, opts);
    for (RecordId id : inj.added) corpus.tags.emplace(id, RecordKind::distractor);
    corpus.index = std::move(inj.index);
  }
  emit_corpus(corpus, dir / kCorpusDir);
  write_index(corpus.index, dir / kIndexFile);
  return {kCorpusDir / "corpus.tsv", kCorpusDir / "queries.jsonl",
          kCorpusDir / "train_queries.jsonl", kCorpusDir / "tags.jsonl", kIndexFile};
}

std::vector<fs::path> train_stage(const RunConfig& config, const fs::path& index_path,
                                  const fs::path& train_queries, const fs::path& dir) {
  const Index index = read_index(index_path);
  const std::vector<Query> queries = read_queries(train_queries);
  if (queries.empty()) fail(Errc::EmptyEvalSet, "no training queries in " + train_queries.string());
  const ReaderHandle reader = make_reader(config, queries.front().vocab);
  TrainerConfig tc = config.trainer;
  tc.jobs = config.effective_jobs();
  const SequentialResult result =
      train_sequential(index, queries, *reader.reader, tc, HeadPair::identity(index.dimension()));

  fs::create_directories(dir / kHeadsDir);
  write_head(result.heads.text, dir / kHeadsDir / "text.rgph");
  write_head(result.heads.image, dir / kHeadsDir / "image.rgph");
  std::vector<EpochStats> history;
  for (const auto& run : result.runs) history.insert(history.end(), run.history.begin(), run.history.end());
  write_loss_history(history, dir / kHistoryFile);
  std::vector<fs::path> out{kHeadsDir / "text.rgph", kHeadsDir / "image.rgph", kHistoryFile};
  if (reader.cache) {
    persist_cache(reader, dir / kReaderCacheFile);
    out.emplace_back(kReaderCacheFile);
  }
  return out;
}

std::vector<fs::path> infer_stage(const RunConfig& config, const fs::path& index_path,
                                  const fs::path& queries_path, const fs::path& heads_dir,
                                  const fs::path& dir) {
  const Index index = read_index(index_path);
  const std::vector<Query> queries = read_queries(queries_path);
  if (queries.empty()) fail(Errc::EmptyEvalSet, "no queries in " + queries_path.string());
  const ReaderHandle reader = make_reader(config, queries.front().vocab);
  const HeadPair identity = HeadPair::identity(index.dimension());
  const HeadPair trained = load_heads(heads_dir, index.dimension());
  const std::size_t jobs = config.effective_jobs();

  InferenceConfig ic;
  ic.k = config.k;
  ic.merge = config.merge;
  ic.seed = config.seed;
  auto run = [&](InferenceMode mode, const HeadPair& heads) {
    ic.mode = mode;
    return to_records(predict_all(queries, index, heads, *reader.reader, ic, jobs), queries);
  };

  fs::create_directories(dir / kPredsDir);
  std::vector<fs::path> out;
  auto emit = [&](const std::string& name, const std::vector<PredictionRecord>& records) {
    write_predictions(records, dir / dump_path(name));
    out.push_back(dump_path(name));
  };
  emit("untrained_fused", run(InferenceMode::fused, identity));
  const auto fused = run(InferenceMode::fused, trained);
  emit("fused", fused);
  emit("top1", run(InferenceMode::top1, trained));
  emit("max_confidence", run(InferenceMode::max_confidence, trained));
  emit("mean_confidence", run(InferenceMode::mean_confidence, trained));

  const auto choices =
      simulated_choices(fused, index, queries, config.reranker_accuracy, config.seed);
  write_choices(choices, dir / kChoicesFile);
  out.push_back(kChoicesFile);
  const ExternalReranker external(choices);
  ic.reranker = &external;
  emit("reranked", run(InferenceMode::reranked, trained));
  ic.reranker = nullptr;

  emit("no_retrieval", run(InferenceMode::no_retrieval, trained));
  emit("no_query_image", run(InferenceMode::no_query_image, trained));
  emit("random_retrieval", run(InferenceMode::random_retrieval, trained));
  return out;
}

std::vector<fs::path> analyze_stage(const RunConfig& config, const fs::path& dir) {
  std::vector<NamedDump> dumps;
  for (const auto& name : pipeline_dumps()) {
    dumps.emplace_back(name, read_predictions(dir / dump_path(name)));
  }
  const ExternalReranker external(read_choices(dir / kChoicesFile));
  const Top1SimilarityReranker top1;
  const TopLogitReranker top_logit;
  const std::vector<const Reranker*> rerankers{&top1, &top_logit, &external};
  for (const auto& [name, preds] : dumps) {
    if (name == "no_retrieval") {
      assert_oracle_dominance(preds, {});
    } else {
      assert_oracle_dominance(preds, rerankers);
    }
  }
  const Report report = analyze(dumps, 0, rerankers, 1);
  const Report table3 = compare(dumps[0].second, dumps[1].second);

  const Index index = read_index(dir / kIndexFile);
  const std::vector<Query> queries = read_queries(dir / kCorpusDir / "queries.jsonl");
  const HeadPair identity = HeadPair::identity(index.dimension());
  const HeadPair trained = load_heads(dir / kHeadsDir, index.dimension());
  json training = json::array();
  for (const auto& s : read_loss_history(dir / kHistoryFile)) {
    if (s.epoch == 0 || s.epoch == config.trainer.epochs) {
      training.push_back({{"head", to_string(s.head)}, {"epoch", s.epoch}, {"mean_kl", s.mean_kl}});
    }
  }

  json summary{{"format", "ragdx.summary"}, {"version", 1}, {"seed", config.seed}};
  summary["fixture"] = {
      {"records", index.size()},
      {"queries", queries.size()},
      {"inject_rate", config.inject_rate},
      {"informative_recall_identity", informative_recall(index, queries, identity, config.k, config.merge)},
      {"informative_recall_trained", informative_recall(index, queries, trained, config.k, config.merge)},
  };
  summary["training"] = training;
  summary["report"] = report.to_json();
  summary["compare"] = table3.to_json();

  std::ofstream js(dir / "summary.json", std::ios::trunc);
  if (!js) fail(Errc::IoError, "cannot write summary.json");
  js << summary.dump(2) << '\n';
  js.close();
  std::ofstream txt(dir / "summary.txt", std::ios::trunc);
  if (!txt) fail(Errc::IoError, "cannot write summary.txt");
  txt << report.to_table() << '\n' << table3.to_table();
  return {"summary.json", "summary.txt"};
}

void run_pipeline(const RunConfig& config, std::ostream& log) {
  config.validate();
  const fs::path dir = config.out_dir;
  Manifest manifest = Manifest::open(dir, to_json(config), {}, log);
  run_stage(manifest, "synth", log, [&] { return synth_stage(config, dir); });
  run_stage(manifest, "train", log, [&] {
    return train_stage(config, dir / kIndexFile, dir / kCorpusDir / "train_queries.jsonl", dir);
  });
  run_stage(manifest, "infer", log, [&] {
    return infer_stage(config, dir / kIndexFile, dir / kCorpusDir / "queries.jsonl", dir / kHeadsDir,
                       dir);
  });
  run_stage(manifest, "analyze", log, [&] { return analyze_stage(config, dir); });
}

}  // namespace ragdx
