// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ragdx/core/json.hpp"

namespace ragdx {

/// Lowercase hex SHA-256 of a file's bytes. Throws ArtifactMissing.
std::string sha256_file(const std::filesystem::path& path);

/// Record of one run directory: the config, the hashes of its inputs, and
/// which stages finished with which outputs. It is written before any stage
/// runs and after each stage completes.
class Manifest {
 public:
  /// Reuses an existing manifest in `dir` when its config and inputs match;
  /// otherwise starts a fresh one. Input paths are hashed here.
  static Manifest open(const std::filesystem::path& dir, const json& config,
                       const std::map<std::string, std::filesystem::path>& inputs,
                       std::ostream& log);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  /// Complete, and every recorded output still exists with its hash.
  bool is_complete(const std::string& stage) const;
  /// `outputs` are relative to dir().
  void complete(const std::string& stage, const std::vector<std::filesystem::path>& outputs);
  const json& data() const noexcept { return data_; }

 private:
  void save() const;

  std::filesystem::path dir_;
  json data_;
};

/// Runs `body` unless `stage` is already complete, in which case a notice
/// goes to `log`. `body` returns the outputs it wrote. Returns whether the
/// stage ran.
bool run_stage(Manifest& manifest, const std::string& stage, std::ostream& log,
               const std::function<std::vector<std::filesystem::path>()>& body);

}  // namespace ragdx
