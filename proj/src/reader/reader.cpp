// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/reader/reader.hpp"

#include <fstream>
#include <optional>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/json.hpp"
#include "ragdx/core/parallel.hpp"

namespace ragdx {

namespace {
constexpr std::string_view kCacheFormat = "ragdx.reader-cache";
constexpr int kCacheVersion = 1;
}  // namespace

std::vector<double> Reader::score_candidate(const Query& query, const IndexRecord& record,
                                            ContextVariant variant) const {
  if (variant == ContextVariant::no_retrieval) {
    fail(Errc::InvalidArgument, "score_candidate called with the no_retrieval variant");
  }
  return checked(query, &record, variant);
}

std::vector<double> Reader::score_alone(const Query& query) const {
  return checked(query, nullptr, ContextVariant::no_retrieval);
}

std::vector<double> Reader::checked(const Query& query, const IndexRecord* record,
                                    ContextVariant variant) const {
  if (query.task == TaskKind::vqa_open) {
    fail(Errc::OpenQuestionUnsupported,
         "query " + query.id + " is open-ended and has no class-restricted distribution");
  }
  if (query.vocab.empty()) fail(Errc::InvalidArgument, "query " + query.id + " has no vocabulary");
  if (!supports(variant)) {
    fail(Errc::UnsupportedMode, "reader " + identity() + " does not support the " +
                                    std::string(to_string(variant)) + " variant");
  }
  auto probs = do_score(query, record, variant);
  if (probs.size() != query.vocab.size() || !is_distribution(probs)) {
    fail(Errc::InvariantViolation, "reader " + identity() + " returned an invalid distribution");
  }
  return probs;
}

ScoreKey score_key(const Query& query, const IndexRecord* record, ContextVariant variant) {
  return {query.id, record ? record->id : kNoRecord, variant};
}

BatchScoreResult batch_score(const Reader& reader, std::span<const ScorePair> pairs,
                             std::size_t jobs) {
  if (pairs.empty()) fail(Errc::InvalidArgument, "batch_score: no pairs");
  const ClassVocab& vocab = pairs.front().query->vocab;
  for (const auto& p : pairs) {
    if (p.query->vocab != vocab) fail(Errc::VocabMismatch, "batch_score: mixed vocabularies");
  }

  struct Slot {
    std::optional<std::vector<double>> probs;
    std::optional<RowError> error;
  };
  std::vector<Slot> slots(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const auto& p = pairs[i];
    const ScoreKey key = score_key(*p.query, p.record, p.variant);
    try {
      slots[i].probs = p.variant == ContextVariant::no_retrieval
                           ? reader.score_alone(*p.query)
                           : reader.score_candidate(*p.query, *p.record, p.variant);
    } catch (const Error& e) {
      slots[i].error = RowError{key, e.code(), e.what()};
    }
  });

  BatchScoreResult out{ReaderScoreTable(vocab, reader.identity()), {}};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (slots[i].error) {
      out.errors.push_back(std::move(*slots[i].error));
    } else {
      out.table.insert(score_key(*p.query, p.record, p.variant), std::move(*slots[i].probs));
    }
  }
  return out;
}

void cache_store(const ReaderScoreTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  write_format_header(out, kCacheFormat, kCacheVersion);
  out << json{{"reader", table.reader_identity()}, {"vocab", table.vocab()}}.dump() << '\n';
  for (const auto& [key, probs] : table.rows()) {
    out << json{{"query_id", key.query_id},
                {"record_id", raw(key.record)},
                {"variant", to_string(key.variant)},
                {"probs", probs}}
               .dump()
        << '\n';
  }
  if (!out) fail(Errc::IoError, "failed writing " + path.string());
}

ReaderScoreTable cache_load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "reader cache not found: " + path.string());
  const std::string origin = path.string();
  expect_format_header(in, kCacheFormat, kCacheVersion, origin);

  std::string line;
  if (!std::getline(in, line)) fail(Errc::CorruptCache, origin + ": missing meta line");
  std::optional<ReaderScoreTable> table;
  try {
    const json meta = json::parse(line);
    table.emplace(meta.at("vocab").get<ClassVocab>(), meta.at("reader").get<std::string>());
  } catch (const std::exception& e) {
    fail(Errc::CorruptCache, origin + ": bad meta line: " + e.what());
  }

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    ScoreKey key;
    std::vector<double> probs;
    try {
      const json row = json::parse(line);
      key = {row.at("query_id").get<std::string>(),
             RecordId{row.at("record_id").get<std::uint64_t>()},
             parse_context_variant(row.at("variant").get<std::string>())};
      probs = row.at("probs").get<std::vector<double>>();
    } catch (const std::exception& e) {
      fail(Errc::CorruptCache, where + ": " + e.what());
    }
    if (probs.size() != table->vocab().size() || !is_distribution(probs)) {
      fail(Errc::CorruptCache, where + ": row is not a probability vector over the vocabulary");
    }
    try {
      table->insert(std::move(key), std::move(probs));
    } catch (const Error& e) {
      fail(Errc::CorruptCache, where + ": " + e.what());
    }
  }
  return std::move(*table);
}

ReaderScoreTable cache_load(const std::filesystem::path& path, const ClassVocab& expected_vocab) {
  auto table = cache_load(path);
  if (table.vocab() != expected_vocab) {
    fail(Errc::VocabMismatch, path.string() + ": cache vocabulary differs from the task vocabulary");
  }
  return table;
}

}  // namespace ragdx
