// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/fusion/rerank.hpp"

#include <algorithm>
#include <fstream>

namespace ragdx {

namespace {
constexpr std::string_view kChoicesFormat = "ragdx.rerank-choices";
constexpr int kChoicesVersion = 1;

void require_candidates(const RerankInput& input) {
  if (input.dists.empty() && input.scores.empty()) {
    fail(Errc::MissingCandidates, "query " + std::string(input.query_id) + " has no candidates");
  }
}
}  // namespace

std::size_t most_confident(std::span<const std::vector<double>> dists) {
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t k = 0; k < dists.size(); ++k) {
    const double v = *std::max_element(dists[k].begin(), dists[k].end());
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

std::size_t Top1SimilarityReranker::choose(const RerankInput& input) const {
  require_candidates(input);
  if (input.scores.empty()) return 0;
  return static_cast<std::size_t>(
      std::max_element(input.scores.begin(), input.scores.end()) - input.scores.begin());
}

std::size_t TopLogitReranker::choose(const RerankInput& input) const {
  require_candidates(input);
  if (input.dists.empty()) fail(Errc::MissingCandidates, "top_logit needs reader outputs");
  return most_confident(input.dists);
}

std::size_t ExternalReranker::choose(const RerankInput& input) const {
  require_candidates(input);
  auto it = choices_.find(std::string(input.query_id));
  if (it == choices_.end()) {
    fail(Errc::ChoiceOutOfRange, "no reranker choice for query " + std::string(input.query_id));
  }
  const std::size_t n = std::max(input.dists.size(), input.scores.size());
  if (it->second >= n) {
    fail(Errc::ChoiceOutOfRange, "choice " + std::to_string(it->second) + " for query " +
                                     it->first + " exceeds " + std::to_string(n) + " candidates");
  }
  return it->second;
}

void write_choices(const std::map<std::string, std::size_t>& choices,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  write_format_header(out, kChoicesFormat, kChoicesVersion);
  for (const auto& [qid, choice] : choices) {
    out << json{{"query_id", qid}, {"choice", choice}}.dump() << '\n';
  }
}

std::map<std::string, std::size_t> read_choices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "choices file not found: " + path.string());
  expect_format_header(in, kChoicesFormat, kChoicesVersion, path.string());
  std::map<std::string, std::size_t> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_json_line(line, path.string(), line_no);
    try {
      out[j.at("query_id").get<std::string>()] = j.at("choice").get<std::size_t>();
    } catch (const json::exception& e) {
      fail(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ragdx
