// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <shared_mutex>

#include "ragdx/reader/reader.hpp"

namespace ragdx {

/// Serves scores from a ReaderScoreTable. On a miss it calls the live
/// reader when one is attached and appends the result; without one a miss
/// throws CacheMiss. Existing rows are never modified. Concurrent reads,
/// single-writer appends.
class CachedReader final : public Reader {
 public:
  explicit CachedReader(ReaderScoreTable table, std::shared_ptr<const Reader> live = nullptr);

  std::string identity() const override { return identity_; }
  bool supports(ContextVariant variant) const override;

  /// Copy of the current table, including rows appended on misses.
  ReaderScoreTable snapshot() const;
  std::size_t misses() const;

 protected:
  std::vector<double> do_score(const Query& query, const IndexRecord* record,
                               ContextVariant variant) const override;

 private:
  std::string identity_;
  std::shared_ptr<const Reader> live_;
  mutable std::shared_mutex mutex_;
  mutable ReaderScoreTable table_;
  mutable std::size_t misses_ = 0;
};

}  // namespace ragdx
