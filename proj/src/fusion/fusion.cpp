// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/parallel.hpp"
#include "ragdx/core/payload.hpp"
#include "ragdx/core/rng.hpp"
#include "ragdx/fusion/rerank.hpp"

namespace ragdx {

namespace {

constexpr std::string_view kModeNames[] = {
    "fused",        "top1",          "max_confidence",   "mean_confidence",
    "reranked",     "no_retrieval",  "random_retrieval", "no_query_image",
};

}  // namespace

std::string_view to_string(InferenceMode m) noexcept {
  return kModeNames[static_cast<std::size_t>(m)];
}

InferenceMode parse_inference_mode(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kModeNames); ++i) {
    if (kModeNames[i] == s) return static_cast<InferenceMode>(i);
  }
  fail(Errc::ParseError, "unknown inference mode '" + std::string(s) + "'");
}

std::vector<ContextPlan> assemble_context(std::span<const IndexRecord* const> candidates,
                                          const Query& query, AssemblyMode mode) {
  const ContextItem query_item{std::nullopt, query.payload_ref, query.question};
  if (mode == AssemblyMode::no_retrieval) return {ContextPlan{query_item}};
  if (candidates.empty()) fail(Errc::InvalidArgument, "assemble_context: no candidates");

  auto item = [](const IndexRecord& r) {
    return ContextItem{r.id, r.payload_ref, payload_param(r.payload_ref, "caption").value_or("")};
  };
  std::vector<ContextPlan> plans;
  if (mode == AssemblyMode::fused) {
    for (const IndexRecord* r : candidates) plans.push_back({item(*r), query_item});
    return plans;
  }
  ContextPlan plan;
  for (const IndexRecord* r : candidates) plan.push_back(item(*r));
  plan.push_back(query_item);
  plans.push_back(std::move(plan));
  return plans;
}

std::vector<double> retrieval_weights(std::span<const double> scores) {
  if (scores.empty()) fail(Errc::InvalidArgument, "retrieval_weights: no scores");
  for (double s : scores) {
    if (!std::isfinite(s)) fail(Errc::NonFinite, "retrieval_weights: non-finite score");
  }
  return softmax(scores, 1.0);
}

FusedPrediction fuse(std::span<const std::vector<double>> candidate_dists,
                     std::span<const double> weights) {
  if (candidate_dists.empty()) fail(Errc::InvalidArgument, "fuse: no candidates");
  if (candidate_dists.size() != weights.size()) {
    fail(Errc::LengthMismatch, "fuse: " + std::to_string(candidate_dists.size()) +
                                   " candidate rows but " + std::to_string(weights.size()) +
                                   " weights");
  }
  if (!is_distribution(weights)) fail(Errc::InvariantViolation, "fuse: weights are not a distribution");
  const std::size_t c = candidate_dists.front().size();
  FusedPrediction out;
  out.fused.assign(c, 0.0);
  for (std::size_t k = 0; k < candidate_dists.size(); ++k) {
    const auto& row = candidate_dists[k];
    if (row.size() != c) fail(Errc::LengthMismatch, "fuse: candidate rows differ in length");
    if (!is_distribution(row)) fail(Errc::InvariantViolation, "fuse: candidate row is not a distribution");
    for (std::size_t j = 0; j < c; ++j) out.fused[j] += weights[k] * row[j];
    out.candidate_labels.push_back(argmax(row));
  }
  out.label = argmax(out.fused);
  out.candidate_dists.assign(candidate_dists.begin(), candidate_dists.end());
  out.weights.assign(weights.begin(), weights.end());
  return out;
}

namespace {

std::vector<double> one_hot(std::size_t n, std::size_t at) {
  std::vector<double> v(n, 0.0);
  v.at(at) = 1.0;
  return v;
}

CandidateSet random_candidates(const Query& query, const Index& index, const HeadPair& heads,
                               std::size_t k, std::uint64_t seed) {
  if (index.empty()) fail(Errc::EmptyIndex, "random_retrieval: index is empty");
  if (k == 0 || k > index.size()) {
    fail(Errc::InvalidArgument, "random_retrieval: k out of range");
  }
  SplitMix64 rng(derive_seed(seed, fnv1a64("random:" + query.id)));
  std::vector<std::size_t> pos(index.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  CandidateSet out{query.id, {}};
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pos[i], pos[i + rng.below(pos.size() - i)]);
    out.items.push_back(best_head_score(query.image, index.at(pos[i]), heads));
  }
  std::sort(out.items.begin(), out.items.end(), ranks_before);
  return out;
}

}  // namespace

FusedPrediction predict(const Query& query, const Index& index, const HeadPair& heads,
                        const Reader& reader, const InferenceConfig& config) {
  const InferenceMode mode = config.mode;
  if (mode == InferenceMode::no_retrieval) {
    auto probs = reader.score_alone(query);
    FusedPrediction out;
    out.query_id = query.id;
    out.mode = mode;
    out.label = argmax(probs);
    out.fused = std::move(probs);
    return out;
  }
  if (mode == InferenceMode::reranked && config.reranker == nullptr) {
    fail(Errc::UnsupportedMode, "reranked inference needs a reranker");
  }
  if (config.k == 0) fail(Errc::ConfigInvalid, "inference k must be at least 1");

  CandidateSet cands;
  if (mode == InferenceMode::random_retrieval) {
    cands = random_candidates(query, index, heads, config.k, config.seed);
  } else {
    cands = dual_retrieve(query.image, index, heads, config.k, config.merge);
    if (cands.items.size() > config.k) cands.items.resize(config.k);
  }

  const ContextVariant variant =
      mode == InferenceMode::no_query_image ? ContextVariant::no_query_image : ContextVariant::full;
  std::vector<std::vector<double>> rows;
  std::vector<double> scores;
  std::vector<RecordId> ids;
  for (const auto& c : cands.items) {
    rows.push_back(reader.score_candidate(query, index.get(c.id), variant));
    scores.push_back(c.raw_score);
    ids.push_back(c.id);
  }
  const std::size_t n = rows.size();

  FusedPrediction out = fuse(rows, retrieval_weights(scores));
  out.query_id = query.id;
  out.mode = mode;
  out.candidate_ids = std::move(ids);
  out.candidate_scores = std::move(scores);

  std::vector<double> weights;
  switch (mode) {
    case InferenceMode::fused:
    case InferenceMode::random_retrieval:
    case InferenceMode::no_query_image:
      return out;
    case InferenceMode::top1: weights = one_hot(n, 0); break;
    case InferenceMode::max_confidence: weights = one_hot(n, most_confident(out.candidate_dists)); break;
    case InferenceMode::mean_confidence: weights.assign(n, 1.0 / double(n)); break;
    case InferenceMode::reranked: {
      const std::size_t pick =
          config.reranker->choose({out.query_id, out.candidate_scores, out.candidate_dists});
      if (pick >= n) fail(Errc::ChoiceOutOfRange, "reranker chose candidate " + std::to_string(pick));
      weights = one_hot(n, pick);
      break;
    }
    case InferenceMode::no_retrieval: break;
  }
  FusedPrediction chosen = fuse(rows, weights);
  chosen.query_id = out.query_id;
  chosen.mode = mode;
  chosen.candidate_ids = std::move(out.candidate_ids);
  chosen.candidate_scores = std::move(out.candidate_scores);
  return chosen;
}

std::vector<FusedPrediction> predict_all(std::span<const Query> queries, const Index& index,
                                         const HeadPair& heads, const Reader& reader,
                                         const InferenceConfig& config, std::size_t jobs) {
  std::vector<FusedPrediction> out(queries.size());
  parallel_for(queries.size(), jobs, [&](std::size_t i) {
    out[i] = predict(queries[i], index, heads, reader, config);
  });
  return out;
}

PredictionRecord to_record(const FusedPrediction& p, const Query& query) {
  if (p.query_id != query.id) fail(Errc::InvalidArgument, "prediction and query ids differ");
  PredictionRecord r;
  r.query_id = p.query_id;
  r.mode = std::string(to_string(p.mode));
  r.task = query.task;
  r.predicted = query.vocab.label(p.label);
  r.gold = query.gold_answer;
  r.fused = p.fused;
  for (std::size_t l : p.candidate_labels) r.candidate_labels.push_back(query.vocab.label(l));
  r.candidate_ids = p.candidate_ids;
  r.weights = p.weights;
  r.candidate_scores = p.candidate_scores;
  r.candidate_dists = p.candidate_dists;
  return r;
}

void to_json(json& j, const PredictionRecord& r) {
  std::vector<std::uint64_t> ids;
  for (RecordId id : r.candidate_ids) ids.push_back(raw(id));
  j = json{{"query_id", r.query_id},
           {"mode", r.mode},
           {"task_kind", to_string(r.task)},
           {"predicted", r.predicted},
           {"gold", r.gold},
           {"fused", r.fused},
           {"candidate_labels", r.candidate_labels},
           {"candidate_ids", ids},
           {"p_r", r.weights},
           {"scores", r.candidate_scores},
           {"candidate_dists", r.candidate_dists}};
}

void from_json(const json& j, PredictionRecord& r) {
  r.query_id = j.at("query_id").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.task = parse_task_kind(j.at("task_kind").get<std::string>());
  r.predicted = j.at("predicted").get<std::string>();
  r.gold = j.at("gold").get<std::string>();
  r.fused = j.value("fused", std::vector<double>{});
  r.candidate_labels = j.at("candidate_labels").get<std::vector<std::string>>();
  r.candidate_ids.clear();
  for (auto id : j.value("candidate_ids", std::vector<std::uint64_t>{})) {
    r.candidate_ids.push_back(RecordId{id});
  }
  r.weights = j.value("p_r", std::vector<double>{});
  r.candidate_scores = j.value("scores", std::vector<double>{});
  r.candidate_dists = j.value("candidate_dists", std::vector<std::vector<double>>{});
}

namespace {
constexpr std::string_view kPredictionFormat = "ragdx.predictions";
constexpr int kPredictionVersion = 1;
}  // namespace

void write_predictions(std::span<const PredictionRecord> records,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  write_format_header(out, kPredictionFormat, kPredictionVersion);
  for (const auto& r : records) out << json(r).dump() << '\n';
  if (!out) fail(Errc::IoError, "failed writing " + path.string());
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "prediction dump not found: " + path.string());
  expect_format_header(in, kPredictionFormat, kPredictionVersion, path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_json_line(line, path.string(), line_no).get<PredictionRecord>());
    } catch (const json::exception& e) {
      fail(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ragdx
