// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ragdx/core/error.hpp"
#include "ragdx/core/json.hpp"
#include "ragdx/core/types.hpp"

namespace ragdx {

struct ClassStats {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

struct TokenScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  std::size_t count = 0;
  double acc = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassStats> per_class;  // sorted by label
  std::optional<double> exact_match;  // vqa_closed
  std::optional<TokenScores> tokens;  // vqa_open, averaged over queries
};

void to_json(json& j, const MetricReport& m);

/// Lowercased, whitespace-split, deduplicated.
std::set<std::string> token_set(std::string_view text);

TokenScores token_scores(std::string_view predicted, std::string_view gold);

/// Per-class F1 averaged over every label seen in gold or pred; a class with
/// no predictions or no gold members scores 0 rather than NaN.
double macro_f1(std::span<const std::string> predicted, std::span<const std::string> gold);

/// Throws EmptyEvalSet on no rows and LengthMismatch on misaligned input.
MetricReport metrics(std::span<const std::string> predicted, std::span<const std::string> gold,
                     TaskKind task);

/// Multi-label rows scored as one binary task per label, then macro-averaged.
double multilabel_macro_f1(std::span<const std::vector<bool>> predicted,
                           std::span<const std::vector<bool>> gold);

}  // namespace ragdx
