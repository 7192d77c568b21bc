// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ragdx {

/// Storage dtype of an embedding. Arithmetic always happens after widening.
enum class DType : std::uint8_t { f32 = 0, f16 = 1 };

/// Which index embedding a retrieval head scores against.
enum class Head : std::uint8_t { text = 0, image = 1 };

enum class TaskKind : std::uint8_t { classification = 0, vqa_closed = 1, vqa_open = 2 };

/// What the reader sees alongside the query for one scoring call.
enum class ContextVariant : std::uint8_t {
  full = 0,            // retrieved pair + query image + question
  no_query_image = 1,  // retrieved pair + question only
  no_retrieval = 2,    // query image + question, no retrieved pair
};

enum class RecordId : std::uint64_t {};

constexpr std::uint64_t raw(RecordId id) noexcept { return static_cast<std::uint64_t>(id); }

std::string_view to_string(DType v) noexcept;
std::string_view to_string(Head v) noexcept;
std::string_view to_string(TaskKind v) noexcept;
std::string_view to_string(ContextVariant v) noexcept;
DType parse_dtype(std::string_view s);
Head parse_head(std::string_view s);
TaskKind parse_task_kind(std::string_view s);
ContextVariant parse_context_variant(std::string_view s);

class Embedding {
 public:
  Embedding() = default;
  /// Throws NonFinite if any entry is NaN or infinite.
  explicit Embedding(std::vector<float> values, DType dtype = DType::f32);

  std::span<const float> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  DType dtype() const noexcept { return dtype_; }
  float operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<float> values_;
  DType dtype_ = DType::f32;
};

/// Throws DimensionMismatch when the dimensions differ.
double dot(const Embedding& a, const Embedding& b);

struct IndexRecord {
  RecordId id{};
  Embedding image;
  Embedding text;
  std::string payload_ref;
  std::string source_tag;

  const Embedding& embedding(Head head) const noexcept {
    return head == Head::text ? text : image;
  }
  bool operator==(const IndexRecord&) const = default;
};

/// Ordered answer-class labels. Order is part of the identity: two vocabs
/// with the same labels in different order are different vocabs.
class ClassVocab {
 public:
  ClassVocab() = default;
  explicit ClassVocab(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(const ClassVocab&) const = default;

 private:
  std::vector<std::string> labels_;
};

struct Query {
  std::string id;
  Embedding image;
  std::string question;
  std::string gold_answer;
  ClassVocab vocab;
  TaskKind task = TaskKind::classification;
  std::string payload_ref;

  /// Index of gold_answer in vocab, if present.
  std::optional<std::size_t> gold_index() const { return vocab.index_of(gold_answer); }
  /// Throws InvalidArgument when a closed-form task's gold is not a vocab label.
  void validate() const;

  bool operator==(const Query&) const = default;
};

struct ScoreKey {
  std::string query_id;
  RecordId record{};
  ContextVariant variant = ContextVariant::full;

  auto operator<=>(const ScoreKey&) const = default;
  bool operator==(const ScoreKey&) const = default;
};

/// Class-restricted reader outputs, one row per (query, candidate, variant).
/// Rows are write-once: re-inserting a key with a different vector is an
/// invariant violation, identical re-inserts are ignored.
class ReaderScoreTable {
 public:
  ReaderScoreTable() = default;
  ReaderScoreTable(ClassVocab vocab, std::string reader_identity);

  const ClassVocab& vocab() const noexcept { return vocab_; }
  const std::string& reader_identity() const noexcept { return reader_identity_; }

  void insert(ScoreKey key, std::vector<double> probs);
  const std::vector<double>* find(const ScoreKey& key) const;
  std::size_t size() const noexcept { return rows_.size(); }
  const std::map<ScoreKey, std::vector<double>>& rows() const noexcept { return rows_; }

  bool operator==(const ReaderScoreTable&) const = default;

 private:
  ClassVocab vocab_;
  std::string reader_identity_;
  std::map<ScoreKey, std::vector<double>> rows_;
};

struct Candidate {
  RecordId id{};
  Head head = Head::image;
  double raw_score = 0.0;

  bool operator==(const Candidate&) const = default;
};

/// Ranking order shared by every top-k and merge: higher score first, then
/// ascending record id.
inline bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
  if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
  return raw(a.id) < raw(b.id);
}

struct CandidateSet {
  std::string query_id;
  std::vector<Candidate> items;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
  bool operator==(const CandidateSet&) const = default;
};

}  // namespace ragdx
