// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ragdx/core/json.hpp"
#include "ragdx/index/index.hpp"
#include "ragdx/reader/reader.hpp"

namespace ragdx {

/// How often each query's top-K candidate set is recomputed under the head
/// being trained.
enum class RefreshPolicy { once, per_epoch, per_step };

std::string_view to_string(RefreshPolicy p) noexcept;
RefreshPolicy parse_refresh_policy(std::string_view s);

struct TrainerConfig {
  double temperature = 0.1;
  std::size_t candidates = 50;
  double learning_rate = 0.05;
  std::size_t epochs = 100;
  double momentum = 0.9;
  std::vector<Head> head_order{Head::text, Head::image};
  std::uint64_t seed = 0;
  bool gradient_check = false;
  RefreshPolicy refresh = RefreshPolicy::per_epoch;
  /// Queries per optimizer step; 0 means the whole training set.
  std::size_t batch_size = 0;
  std::size_t jobs = 1;

  /// Throws ConfigInvalid.
  void validate(std::size_t index_size) const;
};

void to_json(json& j, const TrainerConfig& c);
void from_json(const json& j, TrainerConfig& c);

struct EpochStats {
  std::size_t epoch = 0;
  Head head = Head::text;
  double mean_kl = 0.0;
  double grad_norm = 0.0;
  /// Queries whose posterior was uniform and contributed no gradient.
  std::size_t uniform_queries = 0;
};

/// One run of a single head. history[e] holds the loss measured before the
/// updates of epoch e; the last entry (epoch == config.epochs) is measured on
/// the final parameters.
struct TrainResult {
  ProjectionHead head;
  std::vector<EpochStats> history;
};

/// Distills the reader posterior into one projection head by gradient
/// descent on the mean KL over queries. Open-ended queries are skipped.
/// The reader is only read from. Throws DivergedLoss on non-finite values.
TrainResult train_head(const Index& index, std::span<const Query> queries, const Reader& reader,
                       const ProjectionHead& initial, const TrainerConfig& config);

struct SequentialResult {
  HeadPair heads;
  std::vector<TrainResult> runs;  // in config.head_order
};

/// Trains each head in config.head_order, starting from `initial`. Heads not
/// listed keep their initial parameters.
SequentialResult train_sequential(const Index& index, std::span<const Query> queries,
                                  const Reader& reader, const TrainerConfig& config,
                                  const HeadPair& initial);

void write_loss_history(std::span<const EpochStats> history, const std::filesystem::path& path);
std::vector<EpochStats> read_loss_history(const std::filesystem::path& path);

}  // namespace ragdx
