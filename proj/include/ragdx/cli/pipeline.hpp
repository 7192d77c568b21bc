// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ragdx/cli/config.hpp"
#include "ragdx/cli/manifest.hpp"

namespace ragdx {

// Stage bodies. Each writes under `dir` and returns the paths it wrote,
// relative to `dir`.

/// corpus/{corpus.tsv,queries.jsonl,train_queries.jsonl,tags.jsonl} and
/// index.rgdx. Injects inconsistency first when config.inject_rate > 0.
std::vector<std::filesystem::path> synth_stage(const RunConfig& config,
                                               const std::filesystem::path& dir);

/// heads/{text,image}.rgph and loss_history.jsonl.
std::vector<std::filesystem::path> train_stage(const RunConfig& config,
                                               const std::filesystem::path& index,
                                               const std::filesystem::path& train_queries,
                                               const std::filesystem::path& dir);

/// One dump per evaluated mode under preds/, plus choices.jsonl.
std::vector<std::filesystem::path> infer_stage(const RunConfig& config,
                                               const std::filesystem::path& index,
                                               const std::filesystem::path& queries,
                                               const std::filesystem::path& heads_dir,
                                               const std::filesystem::path& dir);

/// summary.json and summary.txt.
std::vector<std::filesystem::path> analyze_stage(const RunConfig& config,
                                                 const std::filesystem::path& dir);

/// Dump names written by infer_stage, in report order. The first is the
/// pre-distillation reference used for the consistency split.
const std::vector<std::string>& pipeline_dumps();

/// Loads {text,image}.rgph from `dir`; an empty path yields identity heads.
HeadPair load_heads(const std::filesystem::path& dir, std::size_t dimension);

/// synth, train, infer and analyze under config.out_dir with a manifest.
/// Completed stages are skipped.
void run_pipeline(const RunConfig& config, std::ostream& log);

}  // namespace ragdx
