// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ragdx/fusion/fusion.hpp"

namespace ragdx {

/// Lowest candidate index holding the largest single class probability.
std::size_t most_confident(std::span<const std::vector<double>> dists);

/// Highest retrieval score; earliest candidate on ties.
class Top1SimilarityReranker final : public Reranker {
 public:
  std::string name() const override { return "top1_similarity"; }
  std::size_t choose(const RerankInput& input) const override;
};

/// Candidate with the most confident reader output.
class TopLogitReranker final : public Reranker {
 public:
  std::string name() const override { return "top_logit"; }
  std::size_t choose(const RerankInput& input) const override;
};

/// Choices made elsewhere, one candidate index per query id.
class ExternalReranker final : public Reranker {
 public:
  explicit ExternalReranker(std::map<std::string, std::size_t> choices,
                            std::string label = "external")
      : choices_(std::move(choices)), label_(std::move(label)) {}

  std::string name() const override { return label_; }
  /// Throws ChoiceOutOfRange when the query has no choice or the choice
  /// exceeds the candidate count.
  std::size_t choose(const RerankInput& input) const override;

  const std::map<std::string, std::size_t>& choices() const noexcept { return choices_; }

 private:
  std::map<std::string, std::size_t> choices_;
  std::string label_;
};

void write_choices(const std::map<std::string, std::size_t>& choices,
                   const std::filesystem::path& path);
std::map<std::string, std::size_t> read_choices(const std::filesystem::path& path);

}  // namespace ragdx
