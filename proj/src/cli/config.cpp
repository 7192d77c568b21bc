// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/cli/config.hpp"

#include <cstdlib>

#include "ragdx/reader/remote.hpp"

namespace ragdx {

std::string_view to_string(ReaderKind k) noexcept {
  switch (k) {
    case ReaderKind::simulated: return "simulated";
    case ReaderKind::remote: return "remote";
    case ReaderKind::cache: return "cache";
  }
  return "simulated";
}

ReaderKind parse_reader_kind(std::string_view s) {
  if (s == "simulated") return ReaderKind::simulated;
  if (s == "remote") return ReaderKind::remote;
  if (s == "cache") return ReaderKind::cache;
  fail(Errc::ConfigInvalid, "unknown reader kind '" + std::string(s) + "'");
}

SimulatedReaderParams fixture_reader_params(std::size_t classes) {
  SimulatedReaderParams p;
  p.alpha = 0.7;
  p.confusion = SimulatedReaderParams::diagonal_confusion(classes, 0.45);
  p.query_noise = 0.8;
  p.pair_noise = 0.1;
  p.unrelated_weight = 0.05;
  return p;
}

RunConfig::RunConfig() {
  reader.simulated = fixture_reader_params(synth.classes);
  propagate_seed();
}

void RunConfig::propagate_seed() {
  synth.seed = seed;
  reader.simulated.seed = seed;
  trainer.seed = seed;
}

void RunConfig::validate() const {
  synth.validate();
  if (!(inject_rate >= 0.0 && inject_rate <= 1.0)) {
    fail(Errc::ConfigInvalid, "inject rate must be in [0, 1]");
  }
  if (k == 0) fail(Errc::ConfigInvalid, "k must be at least 1");
  if (jobs == 0) fail(Errc::ConfigInvalid, "jobs must be at least 1");
  if (!(reranker_accuracy >= 0.0 && reranker_accuracy <= 1.0)) {
    fail(Errc::ConfigInvalid, "reranker accuracy must be in [0, 1]");
  }
  if (reranker != "top1_similarity" && reranker != "top_logit" && reranker != "external") {
    fail(Errc::ConfigInvalid, "unknown reranker '" + reranker + "'");
  }
  if (reader.timeout_ms <= 0 || reader.max_in_flight == 0) {
    fail(Errc::ConfigInvalid, "reader timeout and concurrency must be positive");
  }
}

json to_json(const RunConfig& c) {
  json reader{{"kind", to_string(c.reader.kind)},
              {"simulated", c.reader.simulated},
              {"endpoint", c.reader.endpoint},
              {"timeout_ms", c.reader.timeout_ms}};
  return json{{"corpus", c.corpus.generic_string()},
              {"index", c.index.generic_string()},
              {"queries", c.queries.generic_string()},
              {"train_queries", c.train_queries.generic_string()},
              {"heads", c.heads_dir.generic_string()},
              {"cache", c.cache.generic_string()},
              {"choices", c.choices.generic_string()},
              {"synth", c.synth},
              {"inject_rate", c.inject_rate},
              {"reader", reader},
              {"trainer", c.trainer},
              {"mode", to_string(c.mode)},
              {"k", c.k},
              {"merge", to_string(c.merge)},
              {"reranker", c.reranker},
              {"reranker_accuracy", c.reranker_accuracy},
              {"seed", c.seed}};
}

ReaderHandle make_reader(const RunConfig& config, const ClassVocab& vocab) {
  ReaderHandle h;
  const std::filesystem::path cache_path =
      config.cache.empty() && config.reader.kind == ReaderKind::remote
          ? config.out_dir / kReaderCacheFile
          : config.cache;
  const bool have_cache_file = !cache_path.empty() && std::filesystem::exists(cache_path);
  auto load_cache = [&] { return cache_load(cache_path, vocab); };

  std::shared_ptr<const Reader> live;
  switch (config.reader.kind) {
    case ReaderKind::simulated:
      live = std::make_shared<SimulatedReader>(config.reader.simulated, vocab.size());
      break;
    case ReaderKind::remote: {
      RemoteReaderConfig rc;
      rc.endpoint = config.reader.endpoint;
      if (const char* env = std::getenv(kReaderEndpointEnv); env && *env) rc.endpoint = env;
      rc.timeout = std::chrono::milliseconds(config.reader.timeout_ms);
      rc.max_in_flight = config.reader.max_in_flight;
      std::shared_ptr<RemoteReader> remote;
      if (!rc.endpoint.empty()) {
        remote = std::make_shared<RemoteReader>(rc);
        if (!remote->healthy()) remote.reset();
      }
      if (!remote) {
        if (!have_cache_file) {
          fail(Errc::ArtifactMissing, "reader at '" + rc.endpoint +
                                          "' is unreachable and no reader cache exists at '" +
                                          cache_path.string() + "'");
        }
        h.cache = std::make_shared<CachedReader>(load_cache());
        h.reader = h.cache;
        return h;
      }
      live = remote;
      break;
    }
    case ReaderKind::cache:
      if (!have_cache_file) {
        fail(Errc::ArtifactMissing, "no reader cache exists at '" + config.cache.string() + "'");
      }
      h.cache = std::make_shared<CachedReader>(load_cache());
      h.reader = h.cache;
      return h;
  }
  ReaderScoreTable table = have_cache_file ? load_cache() : ReaderScoreTable(vocab, live->identity());
  h.cache = std::make_shared<CachedReader>(std::move(table), live);
  h.reader = h.cache;
  return h;
}

void persist_cache(const ReaderHandle& handle, const std::filesystem::path& path) {
  if (handle.cache) cache_store(handle.cache->snapshot(), path);
}

}  // namespace ragdx
