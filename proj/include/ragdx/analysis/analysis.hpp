// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragdx/analysis/metrics.hpp"
#include "ragdx/fusion/fusion.hpp"
#include "ragdx/fusion/rerank.hpp"

namespace ragdx {

enum class Split { consistent, inconsistent };

std::string_view to_string(Split s) noexcept;

/// Per-query consistency tags and the candidate labels behind each tag.
struct ConsistencySplit {
  std::map<std::string, Split> tags;
  std::map<std::string, std::vector<std::string>> labels;

  std::size_t count(Split s) const;
  double inconsistent_proportion() const;
};

/// Inconsistent iff the candidate labels hold at least two distinct values.
/// Throws MissingCandidates for a query without candidate labels and
/// InvalidArgument for duplicated query ids.
ConsistencySplit split_consistency(std::span<const PredictionRecord> predictions);

/// One (predicted, gold) pair per query, the unit every report row is built
/// from.
struct Outcome {
  std::string query_id;
  std::string predicted;
  std::string gold;
  TaskKind task = TaskKind::classification;
};

std::vector<Outcome> outcomes(std::span<const PredictionRecord> predictions);

/// Correct iff gold is among the candidate labels or is the dump's own
/// label; otherwise the dump's label is kept. Throws UnsupportedTask for
/// open-ended queries.
std::vector<Outcome> oracle_outcomes(std::span<const PredictionRecord> predictions);

/// Follows the reranker's chosen candidate label. Throws ChoiceOutOfRange.
std::vector<Outcome> rerank_outcomes(std::span<const PredictionRecord> predictions,
                                     const Reranker& reranker);

/// Metrics over a set of outcomes; the task kind is taken from the rows.
MetricReport evaluate(std::span<const Outcome> rows);

MetricReport oracle_eval(std::span<const PredictionRecord> predictions);
MetricReport rerank_eval(std::span<const PredictionRecord> predictions, const Reranker& reranker);

struct ReportRow {
  std::string name;
  std::optional<MetricReport> all;
  std::optional<MetricReport> consistent;
  std::optional<MetricReport> inconsistent;
};

ReportRow report_row(std::string name, std::span<const Outcome> rows,
                     const ConsistencySplit& split);

struct Report {
  std::string title;
  std::size_t consistent = 0;
  std::size_t inconsistent = 0;
  std::vector<ReportRow> rows;

  const ReportRow* find(std::string_view name) const;
  json to_json() const;
  /// Aligned plain-text table: ACC and MacroF1 per split.
  std::string to_table() const;
};

/// Throws InvariantViolation when a row of `rows` beats the oracle of the
/// same dump on any split.
void assert_oracle_dominance(std::span<const PredictionRecord> predictions,
                             std::span<const Reranker* const> rerankers);

using NamedDump = std::pair<std::string, std::vector<PredictionRecord>>;

/// Summary of one or more dumps of the same query set. The split comes from
/// dumps[reference]; each dump contributes its own row plus its oracle, and
/// each reranker is applied to dumps[rerank_target].
Report analyze(const std::vector<NamedDump>& dumps, std::size_t reference,
               std::span<const Reranker* const> rerankers, std::size_t rerank_target);

/// Before/after report with the split taken from `before`.
Report compare(std::span<const PredictionRecord> before, std::span<const PredictionRecord> after);

void write_report(const Report& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& table_path);

}  // namespace ragdx
