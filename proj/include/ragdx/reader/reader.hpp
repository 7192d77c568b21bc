// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ragdx/core/error.hpp"
#include "ragdx/core/types.hpp"

namespace ragdx {

/// Record id used in score keys for reader calls without a retrieved pair.
inline constexpr RecordId kNoRecord{std::numeric_limits<std::uint64_t>::max()};

/// A frozen reader: maps (retrieved pair, query) to a probability vector
/// over the query's class vocabulary. Implementations must be safe to call
/// concurrently.
class Reader {
 public:
  virtual ~Reader() = default;

  /// Stable name of the scoring function; cache files are tied to it.
  virtual std::string identity() const = 0;
  virtual bool supports(ContextVariant variant) const { (void)variant; return true; }

  /// Distribution for the query with `record` prepended. `variant` may be
  /// full or no_query_image.
  std::vector<double> score_candidate(const Query& query, const IndexRecord& record,
                                      ContextVariant variant = ContextVariant::full) const;

  /// Distribution for the query alone (no retrieved context).
  std::vector<double> score_alone(const Query& query) const;

 protected:
  /// `record` is null exactly when variant == no_retrieval.
  virtual std::vector<double> do_score(const Query& query, const IndexRecord* record,
                                       ContextVariant variant) const = 0;

 private:
  std::vector<double> checked(const Query& query, const IndexRecord* record,
                              ContextVariant variant) const;
};

struct ScorePair {
  const Query* query = nullptr;
  const IndexRecord* record = nullptr;  // null for no_retrieval
  ContextVariant variant = ContextVariant::full;
};

struct RowError {
  ScoreKey key;
  Errc code = Errc::InvariantViolation;
  std::string message;
};

struct BatchScoreResult {
  ReaderScoreTable table;
  std::vector<RowError> errors;
};

/// Scores every pair. A failing row is reported in `errors` with its key and
/// does not abort the batch. All queries must share one vocabulary.
BatchScoreResult batch_score(const Reader& reader, std::span<const ScorePair> pairs,
                             std::size_t jobs = 1);

ScoreKey score_key(const Query& query, const IndexRecord* record, ContextVariant variant);

/// Line-delimited cache file: format header, one meta line with reader
/// identity and vocabulary, then one row per score.
void cache_store(const ReaderScoreTable& table, const std::filesystem::path& path);

/// Throws CorruptCache for malformed or non-normalized rows and
/// VocabMismatch when the stored vocabulary differs from `expected_vocab`.
ReaderScoreTable cache_load(const std::filesystem::path& path, const ClassVocab& expected_vocab);
ReaderScoreTable cache_load(const std::filesystem::path& path);

}  // namespace ragdx
