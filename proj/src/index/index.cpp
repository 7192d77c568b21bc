// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/index/index.hpp"

#include <algorithm>
#include <string>

#include "ragdx/core/error.hpp"

namespace ragdx {

Index::Index(std::size_t dimension, DType storage) : dimension_(dimension), storage_(storage) {
  if (dimension == 0) fail(Errc::DimensionMismatch, "index dimension must be positive");
}

void Index::add(IndexRecord record) {
  if (record.image.dim() != dimension_ || record.text.dim() != dimension_) {
    fail(Errc::DimensionMismatch, "record " + std::to_string(raw(record.id)) +
                                      " does not match index dimension " +
                                      std::to_string(dimension_));
  }
  if (!records_.empty() && raw(record.id) <= raw(records_.back().id)) {
    fail(Errc::DuplicateRecord, "record id " + std::to_string(raw(record.id)) +
                                    " is not greater than the previous id " +
                                    std::to_string(raw(records_.back().id)));
  }
  by_id_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

const IndexRecord* Index::find(RecordId id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

const IndexRecord& Index::get(RecordId id) const {
  const IndexRecord* r = find(id);
  if (r == nullptr) fail(Errc::InvalidArgument, "unknown record id " + std::to_string(raw(id)));
  return *r;
}

RecordId Index::max_id() const {
  if (records_.empty()) fail(Errc::EmptyIndex, "index is empty");
  return records_.back().id;
}

ProjectionHead ProjectionHead::identity(Head head, std::size_t dimension) {
  const auto d = static_cast<Eigen::Index>(dimension);
  return {head, Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
}

Eigen::VectorXd to_vector(const Embedding& e) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(e.dim()));
  for (std::size_t i = 0; i < e.dim(); ++i) v[static_cast<Eigen::Index>(i)] = e[i];
  return v;
}

Eigen::VectorXd ProjectionHead::apply(const Embedding& x) const {
  if (x.dim() != dimension()) {
    fail(Errc::DimensionMismatch, "projection expects dimension " + std::to_string(dimension()) +
                                      ", got " + std::to_string(x.dim()));
  }
  return weight * to_vector(x) + bias;
}

bool ProjectionHead::is_finite() const { return weight.allFinite() && bias.allFinite(); }

std::string_view to_string(MergePolicy m) noexcept {
  return m == MergePolicy::interleave ? "interleave" : "union_rerank";
}

MergePolicy parse_merge_policy(std::string_view s) {
  if (s == "union_rerank") return MergePolicy::union_rerank;
  if (s == "interleave") return MergePolicy::interleave;
  fail(Errc::ParseError, "unknown merge policy '" + std::string(s) + "'");
}

namespace {

// s = q . (W e + b) = (W^T q) . e + q . b: the query is projected once and
// every record is scored with the same arithmetic, so score() and top_k()
// agree bit for bit.
struct ProjectedQuery {
  Eigen::VectorXd wq;
  double offset = 0.0;

  double operator()(const Embedding& e) const {
    double s = 0.0;
    for (std::size_t i = 0; i < e.dim(); ++i) s += wq[static_cast<Eigen::Index>(i)] * e[i];
    return s + offset;
  }
};

ProjectedQuery project_query(const Embedding& query, const ProjectionHead& proj) {
  const Eigen::VectorXd q = to_vector(query);
  return {proj.weight.transpose() * q, q.dot(proj.bias)};
}

}  // namespace

double score(const Embedding& query, const IndexRecord& record, Head head,
             const ProjectionHead& proj) {
  if (proj.head != head) {
    fail(Errc::InvalidArgument, "projection head is for the " + std::string(to_string(proj.head)) +
                                    " head, scored as " + std::string(to_string(head)));
  }
  const auto& e = record.embedding(head);
  if (query.dim() != proj.dimension() || e.dim() != proj.dimension()) {
    fail(Errc::DimensionMismatch, "query dimension " + std::to_string(query.dim()) +
                                      ", record dimension " + std::to_string(e.dim()) +
                                      ", projection dimension " +
                                      std::to_string(proj.dimension()));
  }
  return project_query(query, proj)(e);
}

CandidateSet top_k(const Embedding& query, const Index& index, Head head,
                   const ProjectionHead& proj, std::size_t k) {
  if (index.empty()) fail(Errc::EmptyIndex, "top_k on an empty index");
  if (k == 0 || k > index.size()) {
    fail(Errc::InvalidArgument, "top_k: k=" + std::to_string(k) + " outside [1, " +
                                    std::to_string(index.size()) + "]");
  }
  if (proj.head != head) fail(Errc::InvalidArgument, "top_k: projection/head mismatch");
  if (query.dim() != index.dimension() || proj.dimension() != index.dimension()) {
    fail(Errc::DimensionMismatch, "top_k: query/projection/index dimensions differ");
  }
  const ProjectedQuery pq = project_query(query, proj);
  std::vector<Candidate> all;
  all.reserve(index.size());
  for (const auto& rec : index.records()) all.push_back({rec.id, head, pq(rec.embedding(head))});
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    ranks_before);
  all.resize(k);
  return {"", std::move(all)};
}

namespace {

void keep_best(std::vector<Candidate>& out, const Candidate& c) {
  auto it = std::find_if(out.begin(), out.end(), [&](const Candidate& x) { return x.id == c.id; });
  if (it == out.end()) {
    out.push_back(c);
  } else if (c.raw_score > it->raw_score) {
    *it = c;
  }
}

}  // namespace

CandidateSet merge_candidates(const CandidateSet& text, const CandidateSet& image,
                              MergePolicy merge) {
  CandidateSet out{text.query_id.empty() ? image.query_id : text.query_id, {}};
  if (merge == MergePolicy::union_rerank) {
    for (const auto& c : text.items) keep_best(out.items, c);
    for (const auto& c : image.items) keep_best(out.items, c);
    std::sort(out.items.begin(), out.items.end(), ranks_before);
    return out;
  }
  const std::size_t n = std::max(text.size(), image.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i < text.size()) keep_best(out.items, text.items[i]);
    if (i < image.size()) keep_best(out.items, image.items[i]);
  }
  return out;
}

CandidateSet dual_retrieve(const Embedding& query, const Index& index, const HeadPair& heads,
                           std::size_t k_per_head, MergePolicy merge) {
  return merge_candidates(top_k(query, index, Head::text, heads.text, k_per_head),
                          top_k(query, index, Head::image, heads.image, k_per_head), merge);
}

Candidate best_head_score(const Embedding& query, const IndexRecord& record,
                          const HeadPair& heads) {
  const double t = score(query, record, Head::text, heads.text);
  const double i = score(query, record, Head::image, heads.image);
  // Same preference as merge: the text head is listed first, so it wins ties.
  return i > t ? Candidate{record.id, Head::image, i} : Candidate{record.id, Head::text, t};
}

}  // namespace ragdx
