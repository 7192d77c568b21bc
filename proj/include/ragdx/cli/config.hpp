// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "ragdx/core/json.hpp"
#include "ragdx/distill/trainer.hpp"
#include "ragdx/fusion/fusion.hpp"
#include "ragdx/reader/cached.hpp"
#include "ragdx/reader/simulated.hpp"
#include "ragdx/synth/synth.hpp"

namespace ragdx {

enum class ReaderKind { simulated, remote, cache };

std::string_view to_string(ReaderKind k) noexcept;
ReaderKind parse_reader_kind(std::string_view s);

struct ReaderSpec {
  ReaderKind kind = ReaderKind::simulated;
  SimulatedReaderParams simulated;
  std::string endpoint;
  std::int64_t timeout_ms = 5000;
  std::size_t max_in_flight = 4;
};

/// Score cache written into a run directory. A remote run without --cache
/// falls back to this file in its output directory.
inline constexpr const char* kReaderCacheFile = "reader_cache.jsonl";

/// Reader parameters the shipped fixture is tuned against.
SimulatedReaderParams fixture_reader_params(std::size_t classes);

/// Everything a run depends on. Paths are kept as given.
struct RunConfig {
  std::filesystem::path out_dir = "run";
  std::filesystem::path corpus;
  std::filesystem::path index;
  std::filesystem::path queries;
  std::filesystem::path train_queries;
  std::filesystem::path heads_dir;
  std::filesystem::path cache;
  std::filesystem::path choices;

  SynthSpec synth;
  double inject_rate = 0.0;
  ReaderSpec reader;
  TrainerConfig trainer;

  InferenceMode mode = InferenceMode::fused;
  std::size_t k = 4;
  MergePolicy merge = MergePolicy::union_rerank;
  std::string reranker = "top1_similarity";
  double reranker_accuracy = 0.8;

  std::uint64_t seed = 7;
  std::size_t jobs = 1;
  bool deterministic = false;

  RunConfig();

  /// Copies the run seed into every seeded component.
  void propagate_seed();
  /// Throws ConfigInvalid.
  void validate() const;
  std::size_t effective_jobs() const { return deterministic ? 1 : jobs; }
};

/// Serialized form written into manifests. Worker count is left out since
/// it does not change any output.
json to_json(const RunConfig& c);

/// A reader plus its score cache, when one is in play.
struct ReaderHandle {
  std::shared_ptr<const Reader> reader;
  std::shared_ptr<CachedReader> cache;
};

/// Builds the configured reader, always wrapped in a score cache so each run
/// can persist the scores it used. A remote reader that does not answer its
/// health check falls back to the cache (config.cache, else the run's own
/// kReaderCacheFile); with no cache file this throws ArtifactMissing naming
/// that path. The endpoint environment variable
/// overrides the configured endpoint.
ReaderHandle make_reader(const RunConfig& config, const ClassVocab& vocab);

/// Writes the cache, including rows filled during this run, to `path`.
void persist_cache(const ReaderHandle& handle, const std::filesystem::path& path);

}  // namespace ragdx
