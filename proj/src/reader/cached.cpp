// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/reader/cached.hpp"

#include <mutex>

namespace ragdx {

CachedReader::CachedReader(ReaderScoreTable table, std::shared_ptr<const Reader> live)
    : identity_(table.reader_identity()), live_(std::move(live)), table_(std::move(table)) {
  if (live_ && live_->identity() != identity_) {
    fail(Errc::InvalidArgument, "cache was produced by reader '" + identity_ +
                                    "', live reader is '" + live_->identity() + "'");
  }
}

bool CachedReader::supports(ContextVariant variant) const {
  return live_ ? live_->supports(variant) : true;
}

ReaderScoreTable CachedReader::snapshot() const {
  std::shared_lock lock(mutex_);
  return table_;
}

std::size_t CachedReader::misses() const {
  std::shared_lock lock(mutex_);
  return misses_;
}

std::vector<double> CachedReader::do_score(const Query& query, const IndexRecord* record,
                                           ContextVariant variant) const {
  const ScoreKey key = score_key(query, record, variant);
  {
    std::shared_lock lock(mutex_);
    if (query.vocab != table_.vocab()) {
      fail(Errc::VocabMismatch, "query " + query.id + " vocabulary differs from the cache");
    }
    if (const auto* row = table_.find(key)) return *row;
  }
  if (!live_) {
    fail(Errc::CacheMiss, "no cached score for query " + query.id + ", record " +
                              std::to_string(raw(key.record)) + " (" +
                              std::string(to_string(variant)) + ")");
  }
  auto probs = variant == ContextVariant::no_retrieval ? live_->score_alone(query)
                                                        : live_->score_candidate(query, *record, variant);
  std::unique_lock lock(mutex_);
  if (!table_.find(key)) ++misses_;
  table_.insert(key, probs);
  return probs;
}

}  // namespace ragdx
