// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/error.hpp"

namespace ragdx {

std::string_view to_string(DType v) noexcept { return v == DType::f16 ? "f16" : "f32"; }

std::string_view to_string(Head v) noexcept { return v == Head::text ? "text" : "image"; }

std::string_view to_string(TaskKind v) noexcept {
  switch (v) {
    case TaskKind::classification: return "classification";
    case TaskKind::vqa_closed: return "vqa_closed";
    case TaskKind::vqa_open: return "vqa_open";
  }
  return "classification";
}

std::string_view to_string(ContextVariant v) noexcept {
  switch (v) {
    case ContextVariant::full: return "full";
    case ContextVariant::no_query_image: return "no_query_image";
    case ContextVariant::no_retrieval: return "no_retrieval";
  }
  return "full";
}

DType parse_dtype(std::string_view s) {
  if (s == "f32") return DType::f32;
  if (s == "f16") return DType::f16;
  fail(Errc::ParseError, "unknown dtype '" + std::string(s) + "'");
}

Head parse_head(std::string_view s) {
  if (s == "text") return Head::text;
  if (s == "image") return Head::image;
  fail(Errc::ParseError, "unknown head '" + std::string(s) + "'");
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "vqa_closed") return TaskKind::vqa_closed;
  if (s == "vqa_open") return TaskKind::vqa_open;
  fail(Errc::ParseError, "unknown task kind '" + std::string(s) + "'");
}

ContextVariant parse_context_variant(std::string_view s) {
  if (s == "full") return ContextVariant::full;
  if (s == "no_query_image") return ContextVariant::no_query_image;
  if (s == "no_retrieval") return ContextVariant::no_retrieval;
  fail(Errc::ParseError, "unknown context variant '" + std::string(s) + "'");
}

Embedding::Embedding(std::vector<float> values, DType dtype)
    : values_(std::move(values)), dtype_(dtype) {
  for (float v : values_) {
    if (!std::isfinite(v)) fail(Errc::NonFinite, "embedding contains a non-finite entry");
  }
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    fail(Errc::DimensionMismatch, "dot: dimensions " + std::to_string(a.dim()) + " vs " +
                                      std::to_string(b.dim()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

ClassVocab::ClassVocab(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) fail(Errc::InvalidArgument, "class vocabulary is empty");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) fail(Errc::InvalidArgument, "duplicate class label '" + l + "'");
  }
}

std::optional<std::size_t> ClassVocab::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

void Query::validate() const {
  if (vocab.empty()) fail(Errc::InvalidArgument, "query " + id + " has an empty vocabulary");
  if (task != TaskKind::vqa_open && !gold_index()) {
    fail(Errc::InvalidArgument,
         "query " + id + ": gold answer '" + gold_answer + "' is not a class label");
  }
}

ReaderScoreTable::ReaderScoreTable(ClassVocab vocab, std::string reader_identity)
    : vocab_(std::move(vocab)), reader_identity_(std::move(reader_identity)) {}

void ReaderScoreTable::insert(ScoreKey key, std::vector<double> probs) {
  if (probs.size() != vocab_.size()) {
    fail(Errc::VocabMismatch, "score row for " + key.query_id + "/" +
                                  std::to_string(raw(key.record)) + " has " +
                                  std::to_string(probs.size()) + " entries, vocab has " +
                                  std::to_string(vocab_.size()));
  }
  if (!is_distribution(probs)) {
    fail(Errc::InvariantViolation, "score row for " + key.query_id + "/" +
                                       std::to_string(raw(key.record)) +
                                       " is not a probability vector");
  }
  auto [it, inserted] = rows_.try_emplace(std::move(key), std::move(probs));
  if (!inserted && it->second != probs) {
    fail(Errc::InvariantViolation, "score row for " + it->first.query_id + "/" +
                                       std::to_string(raw(it->first.record)) +
                                       " was scored twice with different results");
  }
}

const std::vector<double>* ReaderScoreTable::find(const ScoreKey& key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

}  // namespace ragdx
