// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>

#include "ragdx/analysis/analysis.hpp"
#include "ragdx/cli/pipeline.hpp"
#include "ragdx/core/parallel.hpp"
#include "ragdx/fusion/rerank.hpp"
#include "ragdx/index/index_io.hpp"

namespace ragdx {

namespace fs = std::filesystem;

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::ConfigInvalid: return kExitConfig;
    case Errc::ArtifactMissing:
    case Errc::CacheMiss: return kExitArtifact;
    case Errc::RemoteUnavailable:
    case Errc::RemoteMalformedResponse: return kExitReader;
    default: return kExitInternal;
  }
}

namespace {

void report_error(std::ostream& err, std::string_view category, int code, std::string_view message) {
  err << json{{"error", category}, {"exit_code", code}, {"message", message}}.dump() << '\n';
}

/// Options shared by several subcommands, bound to plain strings so that
/// the enum parsers report bad values with the module's own errors.
struct Flags {
  std::string out, corpus, index, queries, train_queries, heads, cache, choices, spec;
  std::string dtype = "f32";
  bool normalize = false;
  std::string reader = "simulated", endpoint, reader_params;
  std::int64_t timeout_ms = 5000;
  std::string mode = "fused", merge = "union_rerank", head_order = "text,image",
              refresh = "per_epoch", reranker = "top1_similarity";
  std::vector<std::string> preds, compare;
  std::string reference, rerank_target;

  std::optional<std::size_t> classes, dimension, records_per_class, queries_per_class,
      train_queries_per_class;
  std::optional<double> informative_fraction, distractor_fraction;
};

void add_reader_options(CLI::App* cmd, Flags& f, RunConfig& c) {
  cmd->add_option("--reader", f.reader, "simulated, remote or cache")->capture_default_str();
  cmd->add_option("--reader-endpoint", f.endpoint, "http://host:port of a remote reader");
  cmd->add_option("--reader-timeout-ms", f.timeout_ms)->capture_default_str();
  cmd->add_option("--reader-params", f.reader_params, "JSON file of simulated reader parameters");
  cmd->add_option("--cache", f.cache, "reader score cache to read");
  cmd->add_option("--max-in-flight", c.reader.max_in_flight)->capture_default_str();
}

void add_trainer_options(CLI::App* cmd, Flags& f, RunConfig& c) {
  cmd->add_option("--epochs", c.trainer.epochs)->capture_default_str();
  cmd->add_option("--learning-rate", c.trainer.learning_rate)->capture_default_str();
  cmd->add_option("--temperature", c.trainer.temperature)->capture_default_str();
  cmd->add_option("--candidates", c.trainer.candidates)->capture_default_str();
  cmd->add_option("--momentum", c.trainer.momentum)->capture_default_str();
  cmd->add_option("--batch-size", c.trainer.batch_size, "0 trains on the full set")
      ->capture_default_str();
  cmd->add_option("--head-order", f.head_order)->capture_default_str();
  cmd->add_option("--refresh", f.refresh, "once, per_epoch or per_step")->capture_default_str();
  cmd->add_flag("--gradient-check", c.trainer.gradient_check);
}

void add_inference_options(CLI::App* cmd, Flags& f, RunConfig& c) {
  cmd->add_option("--k", c.k, "candidates per query")->capture_default_str();
  cmd->add_option("--merge", f.merge, "union_rerank or interleave")->capture_default_str();
  cmd->add_option("--reranker", f.reranker, "top1_similarity, top_logit or external")
      ->capture_default_str();
  cmd->add_option("--choices", f.choices, "external reranker choices file");
  cmd->add_option("--reranker-accuracy", c.reranker_accuracy)->capture_default_str();
}

void add_synth_options(CLI::App* cmd, Flags& f, RunConfig& c) {
  cmd->add_option("--spec", f.spec, "JSON synthetic corpus spec");
  cmd->add_option("--classes", f.classes);
  cmd->add_option("--dimension", f.dimension);
  cmd->add_option("--records-per-class", f.records_per_class);
  cmd->add_option("--queries-per-class", f.queries_per_class);
  cmd->add_option("--train-queries-per-class", f.train_queries_per_class);
  cmd->add_option("--informative-fraction", f.informative_fraction);
  cmd->add_option("--distractor-fraction", f.distractor_fraction);
  cmd->add_option("--inject-rate", c.inject_rate)->capture_default_str();
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::ConfigInvalid, path.string() + ": " + e.what());
  }
}

/// Folds the raw flags into the run config.
void finish_config(const Flags& f, RunConfig& c) {
  try {
    if (!f.spec.empty()) c.synth = read_json_file(f.spec).get<SynthSpec>();
    if (!f.reader_params.empty()) {
      c.reader.simulated = read_json_file(f.reader_params).get<SimulatedReaderParams>();
    }
  } catch (const json::exception& e) {
    fail(Errc::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  if (f.classes) c.synth.classes = *f.classes;
  if (f.dimension) c.synth.dimension = *f.dimension;
  if (f.records_per_class) c.synth.records_per_class = *f.records_per_class;
  if (f.queries_per_class) c.synth.queries_per_class = *f.queries_per_class;
  if (f.train_queries_per_class) c.synth.train_queries_per_class = *f.train_queries_per_class;
  if (f.informative_fraction) c.synth.informative_fraction = *f.informative_fraction;
  if (f.distractor_fraction) c.synth.distractor_fraction = *f.distractor_fraction;
  if (f.reader_params.empty() && c.reader.simulated.confusion.size() != c.synth.classes) {
    c.reader.simulated = fixture_reader_params(c.synth.classes);
  }

  c.out_dir = f.out.empty() ? fs::path("run") : fs::path(f.out);
  c.corpus = f.corpus;
  c.index = f.index;
  c.queries = f.queries;
  c.train_queries = f.train_queries;
  c.heads_dir = f.heads;
  c.cache = f.cache;
  c.choices = f.choices;
  c.reader.endpoint = f.endpoint;
  c.reader.timeout_ms = f.timeout_ms;
  c.reranker = f.reranker;

  auto config_error = [](auto&& parse) {
    try {
      parse();
    } catch (const Error& e) {
      if (e.code() == Errc::ParseError) fail(Errc::ConfigInvalid, e.what());
      throw;
    }
  };
  config_error([&] { c.reader.kind = parse_reader_kind(f.reader); });
  config_error([&] { c.mode = parse_inference_mode(f.mode); });
  config_error([&] { c.merge = parse_merge_policy(f.merge); });
  config_error([&] { c.trainer.refresh = parse_refresh_policy(f.refresh); });
  config_error([&] {
    c.trainer.head_order.clear();
    std::string rest = f.head_order;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      c.trainer.head_order.push_back(parse_head(rest.substr(0, comma)));
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    }
  });
  c.propagate_seed();
  c.validate();
}

json command_config(std::string_view command, const RunConfig& c) {
  return json{{"command", command}, {"config", to_json(c)}};
}

std::vector<fs::path> write_candidates(const RunConfig& c, const fs::path& dir) {
  const Index index = read_index(c.index);
  const auto queries = read_queries(c.queries);
  const HeadPair heads = load_heads(c.heads_dir, index.dimension());
  std::vector<CandidateSet> sets(queries.size());
  parallel_for(queries.size(), c.effective_jobs(), [&](std::size_t i) {
    sets[i] = dual_retrieve(queries[i].image, index, heads, c.k, c.merge);
    if (sets[i].items.size() > c.k) sets[i].items.resize(c.k);
    sets[i].query_id = queries[i].id;
  });
  std::ofstream out(dir / "candidates.jsonl", std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write candidates.jsonl");
  write_format_header(out, "ragdx.candidates", 1);
  for (const auto& s : sets) out << json(s).dump() << '\n';
  return {"candidates.jsonl"};
}

std::unique_ptr<Reranker> make_reranker(const RunConfig& c) {
  if (c.reranker == "top1_similarity") return std::make_unique<Top1SimilarityReranker>();
  if (c.reranker == "top_logit") return std::make_unique<TopLogitReranker>();
  if (c.choices.empty()) fail(Errc::ConfigInvalid, "the external reranker needs --choices");
  return std::make_unique<ExternalReranker>(read_choices(c.choices));
}

std::vector<fs::path> write_predictions_for(const RunConfig& c, const fs::path& dir) {
  const Index index = read_index(c.index);
  const auto queries = read_queries(c.queries);
  if (queries.empty()) fail(Errc::EmptyEvalSet, "no queries in " + c.queries.string());
  const ReaderHandle reader = make_reader(c, queries.front().vocab);
  const HeadPair heads = load_heads(c.heads_dir, index.dimension());
  std::unique_ptr<Reranker> reranker;
  InferenceConfig ic;
  ic.mode = c.mode;
  ic.k = c.k;
  ic.merge = c.merge;
  ic.seed = c.seed;
  if (c.mode == InferenceMode::reranked) {
    reranker = make_reranker(c);
    ic.reranker = reranker.get();
  }
  const auto preds = predict_all(queries, index, heads, *reader.reader, ic, c.effective_jobs());
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < preds.size(); ++i) records.push_back(to_record(preds[i], queries[i]));
  write_predictions(records, dir / "predictions.jsonl");
  std::vector<fs::path> out{"predictions.jsonl"};
  if (reader.cache) {
    persist_cache(reader, dir / kReaderCacheFile);
    out.emplace_back(kReaderCacheFile);
  }
  return out;
}

std::pair<std::string, fs::path> split_named(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::vector<fs::path> write_analysis(const RunConfig& c, const Flags& f, const fs::path& dir) {
  Report report;
  if (!f.compare.empty()) {
    const auto before = read_predictions(f.compare.at(0));
    const auto after = read_predictions(f.compare.at(1));
    report = compare(before, after);
  } else {
    if (f.preds.empty()) fail(Errc::ConfigInvalid, "analyze needs --preds or --compare");
    std::vector<NamedDump> dumps;
    for (const auto& arg : f.preds) {
      auto [name, path] = split_named(arg);
      dumps.emplace_back(name, read_predictions(path));
    }
    auto find = [&](const std::string& name) -> std::size_t {
      if (name.empty()) return 0;
      for (std::size_t i = 0; i < dumps.size(); ++i) {
        if (dumps[i].first == name) return i;
      }
      fail(Errc::ConfigInvalid, "no dump named '" + name + "'");
    };
    const std::size_t reference = find(f.reference);
    const std::size_t target = f.rerank_target.empty() ? reference : find(f.rerank_target);
    const Top1SimilarityReranker top1;
    const TopLogitReranker top_logit;
    std::optional<ExternalReranker> external;
    std::vector<const Reranker*> rerankers;
    const bool has_candidates =
        std::all_of(dumps[target].second.begin(), dumps[target].second.end(),
                    [](const auto& p) { return !p.candidate_labels.empty(); });
    if (has_candidates) {
      rerankers = {&top1, &top_logit};
      if (!c.choices.empty()) {
        external.emplace(read_choices(c.choices));
        rerankers.push_back(&*external);
      }
    }
    for (const auto& [name, preds] : dumps) {
      const bool cands = std::all_of(preds.begin(), preds.end(),
                                     [](const auto& p) { return !p.candidate_labels.empty(); });
      assert_oracle_dominance(preds, cands ? std::span<const Reranker* const>(rerankers)
                                           : std::span<const Reranker* const>());
    }
    report = analyze(dumps, reference, rerankers, target);
  }
  write_report(report, dir / "summary.json", dir / "summary.txt");
  return {"summary.json", "summary.txt"};
}

std::map<std::string, fs::path> inputs_of(const RunConfig& c, const Flags& f) {
  std::map<std::string, fs::path> in{{"corpus", c.corpus},    {"index", c.index},
                                     {"queries", c.queries},  {"cache", c.cache},
                                     {"choices", c.choices},  {"spec", f.spec},
                                     {"reader_params", f.reader_params}};
  if (!c.heads_dir.empty()) {
    in["heads_text"] = c.heads_dir / "text.rgph";
    in["heads_image"] = c.heads_dir / "image.rgph";
  }
  for (std::size_t i = 0; i < f.preds.size(); ++i) {
    in["preds" + std::to_string(i)] = split_named(f.preds[i]).second;
  }
  for (std::size_t i = 0; i < f.compare.size(); ++i) in["compare" + std::to_string(i)] = f.compare[i];
  for (auto it = in.begin(); it != in.end();) {
    if (it->second.empty()) {
      it = in.erase(it);
    } else {
      if (!fs::exists(it->second)) {
        fail(Errc::ArtifactMissing, "input " + it->first + " not found: " + it->second.string());
      }
      ++it;
    }
  }
  return in;
}

void require(const fs::path& p, std::string_view flag) {
  if (p.empty()) fail(Errc::ConfigInvalid, std::string(flag) + " is required");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retriever distillation and fused inference over a multimodal index", "ragdx"};
  app.set_config("--config", "", "TOML/INI config file; flags override its values");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig c;
  Flags f;
  app.add_option("--seed", c.seed, "the single seed all randomness derives from")
      ->capture_default_str();
  app.add_option("--jobs", c.jobs, "worker cap")->capture_default_str();
  app.add_flag("--deterministic", c.deterministic, "sequential execution");

  auto* index_cmd = app.add_subcommand("index", "build or inspect a binary index");
  index_cmd->require_subcommand(1);
  auto* build_cmd = index_cmd->add_subcommand("build", "ingest a corpus TSV");
  build_cmd->add_option("--corpus", f.corpus)->required();
  build_cmd->add_option("--out", f.out)->required();
  build_cmd->add_option("--dtype", f.dtype, "f32 or f16")->capture_default_str();
  build_cmd->add_flag("--normalize", f.normalize, "L2-normalize embeddings");
  auto* inspect_cmd = index_cmd->add_subcommand("inspect", "summarize an index file");
  inspect_cmd->add_option("--index", f.index)->required();

  auto* retrieve_cmd = app.add_subcommand("retrieve", "top-k candidates per query");
  retrieve_cmd->add_option("--index", f.index)->required();
  retrieve_cmd->add_option("--queries", f.queries)->required();
  retrieve_cmd->add_option("--heads", f.heads, "directory of trained heads");
  retrieve_cmd->add_option("--out", f.out)->required();
  retrieve_cmd->add_option("--k", c.k)->capture_default_str();
  retrieve_cmd->add_option("--merge", f.merge)->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "distill the reader into both heads");
  train_cmd->add_option("--index", f.index)->required();
  train_cmd->add_option("--queries", f.queries, "training queries")->required();
  train_cmd->add_option("--out", f.out)->required();
  add_reader_options(train_cmd, f, c);
  add_trainer_options(train_cmd, f, c);

  auto* infer_cmd = app.add_subcommand("infer", "predict with one inference mode");
  infer_cmd->add_option("--index", f.index)->required();
  infer_cmd->add_option("--queries", f.queries)->required();
  infer_cmd->add_option("--heads", f.heads, "directory of trained heads; identity if omitted");
  infer_cmd->add_option("--out", f.out)->required();
  infer_cmd->add_option("--mode", f.mode)->capture_default_str();
  add_reader_options(infer_cmd, f, c);
  add_inference_options(infer_cmd, f, c);

  auto* analyze_cmd = app.add_subcommand("analyze", "metrics, consistency split, oracle, rerankers");
  analyze_cmd->add_option("--preds", f.preds, "prediction dump, optionally NAME=PATH");
  analyze_cmd->add_option("--compare", f.compare, "BEFORE AFTER prediction dumps")->expected(2);
  analyze_cmd->add_option("--reference", f.reference, "dump that defines the split");
  analyze_cmd->add_option("--rerank-target", f.rerank_target, "dump the rerankers run on");
  analyze_cmd->add_option("--choices", f.choices, "external reranker choices file");
  analyze_cmd->add_option("--out", f.out)->required();

  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic corpus");
  synth_cmd->add_option("--out", f.out)->required();
  add_synth_options(synth_cmd, f, c);
  add_reader_options(synth_cmd, f, c);
  synth_cmd->add_option("--k", c.k)->capture_default_str();

  auto* pipeline_cmd = app.add_subcommand("pipeline", "synth, train, infer and analyze");
  pipeline_cmd->add_option("--out", f.out)->required();
  add_synth_options(pipeline_cmd, f, c);
  add_reader_options(pipeline_cmd, f, c);
  add_trainer_options(pipeline_cmd, f, c);
  add_inference_options(pipeline_cmd, f, c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "ConfigInvalid", kExitConfig, e.what());
    return kExitConfig;
  }

  try {
    finish_config(f, c);
    auto stage = [&](std::string_view command,
                     const std::function<std::vector<fs::path>(const fs::path&)>& body) {
      Manifest m = Manifest::open(c.out_dir, command_config(command, c), inputs_of(c, f), err);
      run_stage(m, std::string(command), err, [&] { return body(c.out_dir); });
    };

    if (build_cmd->parsed()) {
      require(c.corpus, "--corpus");
      IngestOptions opts;
      try {
        opts.storage = parse_dtype(f.dtype);
      } catch (const Error& e) {
        fail(Errc::ConfigInvalid, e.what());
      }
      opts.normalize = f.normalize;
      stage("index-build", [&](const fs::path& dir) {
        write_index(ingest_corpus(c.corpus, opts), dir / "index.rgdx");
        return std::vector<fs::path>{"index.rgdx"};
      });
    } else if (inspect_cmd->parsed()) {
      const Index index = read_index(c.index);
      std::map<std::string, std::size_t> sources;
      for (const auto& r : index.records()) ++sources[r.source_tag];
      json info{{"format_version", kIndexVersion},
                {"dimension", index.dimension()},
                {"dtype", to_string(index.storage())},
                {"records", index.size()},
                {"sources", sources}};
      if (!index.empty()) {
        info["first_id"] = raw(index.records().front().id);
        info["last_id"] = raw(index.max_id());
      }
      out << info.dump(2) << '\n';
    } else if (retrieve_cmd->parsed()) {
      stage("retrieve", [&](const fs::path& dir) { return write_candidates(c, dir); });
    } else if (train_cmd->parsed()) {
      stage("train", [&](const fs::path& dir) { return train_stage(c, c.index, c.queries, dir); });
    } else if (infer_cmd->parsed()) {
      stage("infer", [&](const fs::path& dir) { return write_predictions_for(c, dir); });
    } else if (analyze_cmd->parsed()) {
      stage("analyze", [&](const fs::path& dir) { return write_analysis(c, f, dir); });
    } else if (synth_cmd->parsed()) {
      stage("synth", [&](const fs::path& dir) { return synth_stage(c, dir); });
    } else if (pipeline_cmd->parsed()) {
      run_pipeline(c, err);
      out << (c.out_dir / "summary.json").string() << '\n';
    }
  } catch (const Error& e) {
    const int code = exit_code(e.code());
    report_error(err, to_string(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    report_error(err, "Internal", kExitInternal, e.what());
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace ragdx
