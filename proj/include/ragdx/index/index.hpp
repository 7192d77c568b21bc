// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "ragdx/core/types.hpp"

namespace ragdx {

/// Exact in-memory index. Records are kept in strictly increasing id order,
/// which is also the on-disk order.
class Index {
 public:
  Index() = default;
  Index(std::size_t dimension, DType storage);

  std::size_t dimension() const noexcept { return dimension_; }
  DType storage() const noexcept { return storage_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// Appends a record. Throws DimensionMismatch on embedding size and
  /// DuplicateRecord when the id is not greater than the last id.
  void add(IndexRecord record);

  const std::vector<IndexRecord>& records() const noexcept { return records_; }
  const IndexRecord& at(std::size_t pos) const { return records_.at(pos); }
  const IndexRecord* find(RecordId id) const;
  const IndexRecord& get(RecordId id) const;
  RecordId max_id() const;

  bool operator==(const Index& other) const {
    return dimension_ == other.dimension_ && storage_ == other.storage_ &&
           records_ == other.records_;
  }

 private:
  std::size_t dimension_ = 0;
  DType storage_ = DType::f32;
  std::vector<IndexRecord> records_;
  std::unordered_map<RecordId, std::size_t> by_id_;
};

/// Trainable affine map applied to index embeddings: x -> W x + b.
struct ProjectionHead {
  Head head = Head::image;
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  static ProjectionHead identity(Head head, std::size_t dimension);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(bias.size()); }
  Eigen::VectorXd apply(const Embedding& x) const;
  bool is_finite() const;

  bool operator==(const ProjectionHead& o) const {
    return head == o.head && weight == o.weight && bias == o.bias;
  }
};

/// Heads used by dual retrieval; both are always configured.
struct HeadPair {
  ProjectionHead text;
  ProjectionHead image;

  static HeadPair identity(std::size_t dimension) {
    return {ProjectionHead::identity(Head::text, dimension),
            ProjectionHead::identity(Head::image, dimension)};
  }
  const ProjectionHead& operator[](Head h) const noexcept { return h == Head::text ? text : image; }
  ProjectionHead& operator[](Head h) noexcept { return h == Head::text ? text : image; }
};

enum class MergePolicy { union_rerank, interleave };

std::string_view to_string(MergePolicy m) noexcept;
MergePolicy parse_merge_policy(std::string_view s);

Eigen::VectorXd to_vector(const Embedding& e);

/// dot(query, W * emb + b) where emb is the record's text or image embedding.
double score(const Embedding& query, const IndexRecord& record, Head head,
             const ProjectionHead& proj);

/// Exact top-k by full scan.
CandidateSet top_k(const Embedding& query, const Index& index, Head head,
                   const ProjectionHead& proj, std::size_t k);

/// Runs both heads and merges their candidate lists. A record found by both
/// heads keeps its higher raw score (and that head's tag).
CandidateSet dual_retrieve(const Embedding& query, const Index& index, const HeadPair& heads,
                           std::size_t k_per_head, MergePolicy merge = MergePolicy::union_rerank);

/// Merges two per-head lists (each already in rank order).
CandidateSet merge_candidates(const CandidateSet& text, const CandidateSet& image,
                              MergePolicy merge);

/// Best raw score of a record across both heads.
Candidate best_head_score(const Embedding& query, const IndexRecord& record,
                          const HeadPair& heads);

}  // namespace ragdx
