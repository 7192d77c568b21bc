// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ragdx/core/json.hpp"
#include "ragdx/fusion/fusion.hpp"
#include "ragdx/index/index.hpp"

namespace ragdx {

/// Gaussian class clusters with three record kinds per class:
///  informative  image in its own class cluster, caption about its label
///  distractor   image near another class's cluster, caption about its label
///  background   image near its class cluster but unrelated to it, generic
///               caption
/// Query images are drawn around their gold class center.
struct SynthSpec {
  std::size_t classes = 4;
  std::size_t dimension = 32;
  std::size_t records_per_class = 50;
  std::size_t queries_per_class = 50;
  /// Separate queries used only for training the heads.
  std::size_t train_queries_per_class = 50;
  double sigma_between = 1.0;
  double sigma_within = 0.5;
  double informative_fraction = 0.1;
  double distractor_fraction = 0.04;
  /// Correlation between a record's caption and image embeddings.
  double text_correlation = 0.5;
  /// Scale of distractor and background images along their cluster center.
  double background_pull = 0.9;
  std::uint64_t seed = 7;

  /// Throws ConfigInvalid.
  void validate() const;
};

void to_json(json& j, const SynthSpec& s);
void from_json(const json& j, SynthSpec& s);

enum class RecordKind { informative, distractor, background };

std::string_view to_string(RecordKind k) noexcept;
RecordKind parse_record_kind(std::string_view s);

struct SynthCorpus {
  Index index;
  std::vector<Query> queries;        // evaluation set
  std::vector<Query> train_queries;  // training set
  std::map<RecordId, RecordKind> tags;
};

std::string class_label(std::size_t c);
ClassVocab synth_vocab(std::size_t classes);

/// Pure function of the spec.
SynthCorpus generate(const SynthSpec& spec);

/// Record metadata carried in payload refs.
RecordKind record_kind(const IndexRecord& record);
std::string record_label(const IndexRecord& record);
std::string record_cluster(const IndexRecord& record);

struct InjectOptions {
  std::size_t k = 4;
  MergePolicy merge = MergePolicy::union_rerank;
  std::uint64_t seed = 7;
  /// Added to the current best score for each injected record.
  double margin = 0.05;
  /// When set, a query counts as mixed when the reader's per-candidate
  /// labels disagree rather than the records' own labels.
  const Reader* reader = nullptr;
};

struct InjectionResult {
  Index index;
  std::vector<RecordId> added;
  std::vector<std::string> affected_queries;
};

/// Raises the share of `queries` whose identity-head top-k holds records of
/// at least two labels (or, given a reader, yields two reader labels) to
/// `rate`. Chosen queries receive k/2 records of one
/// wrong label placed just above their current best candidate. Queries that
/// are already mixed count toward the target. rate == 0 leaves the index
/// unchanged. Throws InfeasibleRate when the index cannot host the top-k.
InjectionResult inject_inconsistency(const Index& index, std::span<const Query> queries,
                                     double rate, const InjectOptions& options = {});

/// Share of queries whose top-k under `heads` holds records of at least two
/// labels.
double mixed_label_rate(const Index& index, std::span<const Query> queries, const HeadPair& heads,
                        std::size_t k, MergePolicy merge = MergePolicy::union_rerank);

/// Mean over queries of hits / min(k, relevant), where relevant records are
/// informative ones of the query's gold label.
double informative_recall(const Index& index, std::span<const Query> queries,
                          const HeadPair& heads, std::size_t k,
                          MergePolicy merge = MergePolicy::union_rerank);

/// Stand-in for an external reranking model: with probability `accuracy`
/// picks the best-ranked informative candidate from the query's cluster,
/// otherwise the top-similarity candidate.
std::map<std::string, std::size_t> simulated_choices(std::span<const PredictionRecord> predictions,
                                                     const Index& index,
                                                     std::span<const Query> queries,
                                                     double accuracy, std::uint64_t seed);

/// Writes corpus.tsv, queries.jsonl, train_queries.jsonl and tags.jsonl.
void emit_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace ragdx
