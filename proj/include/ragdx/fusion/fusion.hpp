// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragdx/core/json.hpp"
#include "ragdx/index/index.hpp"
#include "ragdx/reader/reader.hpp"

namespace ragdx {

enum class InferenceMode {
  fused,
  top1,
  max_confidence,
  mean_confidence,
  reranked,
  no_retrieval,
  random_retrieval,
  no_query_image,
};

std::string_view to_string(InferenceMode m) noexcept;
InferenceMode parse_inference_mode(std::string_view s);

/// One (image, text) slot of a reader prompt. Candidate slots carry the
/// record id; the query slot does not.
struct ContextItem {
  std::optional<RecordId> record;
  std::string payload_ref;
  std::string text;

  bool operator==(const ContextItem&) const = default;
};

using ContextPlan = std::vector<ContextItem>;

enum class AssemblyMode { fused, multi_shot, no_retrieval };

/// fused: one plan per candidate, each [candidate, query].
/// multi_shot: one plan with every candidate in order, then the query.
/// no_retrieval: one plan holding only the query; candidates are ignored.
std::vector<ContextPlan> assemble_context(std::span<const IndexRecord* const> candidates,
                                          const Query& query, AssemblyMode mode);

/// softmax(scores) with unit temperature. Throws NonFinite.
std::vector<double> retrieval_weights(std::span<const double> scores);

struct FusedPrediction {
  std::string query_id;
  InferenceMode mode = InferenceMode::fused;
  std::vector<double> fused;
  std::vector<std::vector<double>> candidate_dists;
  std::vector<double> weights;  // p_R over candidates
  std::size_t label = 0;
  std::vector<std::size_t> candidate_labels;
  std::vector<RecordId> candidate_ids;
  std::vector<double> candidate_scores;
};

/// Convex combination of the candidate rows under `weights`; the label is
/// the argmax (lowest class index on ties). Throws LengthMismatch.
FusedPrediction fuse(std::span<const std::vector<double>> candidate_dists,
                     std::span<const double> weights);

/// What a reranker sees of one query: candidates in retrieval order.
struct RerankInput {
  std::string_view query_id;
  std::span<const double> scores;
  std::span<const std::vector<double>> dists;
};

/// Picks one candidate per query. Implementations must be pure.
class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual std::string name() const = 0;
  virtual std::size_t choose(const RerankInput& input) const = 0;
};

struct InferenceConfig {
  InferenceMode mode = InferenceMode::fused;
  std::size_t k = 4;
  MergePolicy merge = MergePolicy::union_rerank;
  std::uint64_t seed = 0;
  /// Required by the reranked mode.
  const Reranker* reranker = nullptr;
};

FusedPrediction predict(const Query& query, const Index& index, const HeadPair& heads,
                        const Reader& reader, const InferenceConfig& config);

std::vector<FusedPrediction> predict_all(std::span<const Query> queries, const Index& index,
                                         const HeadPair& heads, const Reader& reader,
                                         const InferenceConfig& config, std::size_t jobs);

/// A prediction joined with what the analysis needs to judge it.
struct PredictionRecord {
  std::string query_id;
  std::string mode;
  TaskKind task = TaskKind::classification;
  std::string predicted;
  std::string gold;
  std::vector<double> fused;
  std::vector<std::string> candidate_labels;
  std::vector<RecordId> candidate_ids;
  std::vector<double> weights;
  std::vector<double> candidate_scores;
  std::vector<std::vector<double>> candidate_dists;

  bool operator==(const PredictionRecord&) const = default;
};

PredictionRecord to_record(const FusedPrediction& prediction, const Query& query);

void to_json(json& j, const PredictionRecord& r);
void from_json(const json& j, PredictionRecord& r);

void write_predictions(std::span<const PredictionRecord> records,
                       const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace ragdx
