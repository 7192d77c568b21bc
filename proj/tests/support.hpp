// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "ragdx/core/rng.hpp"
#include "ragdx/core/types.hpp"
#include "ragdx/index/index.hpp"

namespace ragdx::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ragdx-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline Embedding emb(std::vector<float> v) { return Embedding(std::move(v)); }

inline IndexRecord record(std::uint64_t id, std::vector<float> image, std::vector<float> text,
                          std::string payload = "", std::string source = "test") {
  return {RecordId{id}, emb(std::move(image)), emb(std::move(text)),
          payload.empty() ? "rec/" + std::to_string(id) : std::move(payload), std::move(source)};
}

inline Embedding random_embedding(SplitMix64& rng, std::size_t d) {
  std::vector<float> v(d);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return Embedding(std::move(v));
}

/// Index of `n` random records with ids 0..n-1 (or scattered ids).
inline Index random_index(SplitMix64& rng, std::size_t n, std::size_t d, bool sparse_ids = false) {
  Index index(d, DType::f32);
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    id += sparse_ids ? 1 + rng.below(5) : (i == 0 ? 0 : 1);
    index.add({RecordId{id}, random_embedding(rng, d), random_embedding(rng, d),
               "rec/" + std::to_string(id), "random"});
  }
  return index;
}

inline Query class_query(std::string id, std::vector<float> image, std::string gold,
                         std::vector<std::string> labels) {
  Query q;
  q.id = std::move(id);
  q.image = emb(std::move(image));
  q.question = "which class?";
  q.gold_answer = std::move(gold);
  q.vocab = ClassVocab(std::move(labels));
  return q;
}

}  // namespace ragdx::testing
