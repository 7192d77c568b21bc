// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

namespace ragdx {

namespace {
constexpr std::string_view kManifestFormat = "ragdx.manifest";
constexpr int kManifestVersion = 1;
constexpr const char* kManifestFile = "manifest.json";
}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ArtifactMissing, "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    fail(Errc::InvariantViolation, "SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

Manifest Manifest::open(const std::filesystem::path& dir, const json& config,
                        const std::map<std::string, std::filesystem::path>& inputs,
                        std::ostream& log) {
  std::filesystem::create_directories(dir);
  json input_hashes = json::object();
  for (const auto& [name, path] : inputs) {
    if (path.empty()) continue;
    input_hashes[name] = {{"path", path.generic_string()}, {"sha256", sha256_file(path)}};
  }

  Manifest m;
  m.dir_ = dir;
  const auto path = dir / kManifestFile;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    json old;
    try {
      old = json::parse(in);
    } catch (const json::exception&) {
      old = json();
    }
    if (old.is_object() && old.value("format", "") == kManifestFormat &&
        old.value("config", json()) == config && old.value("inputs", json()) == input_hashes) {
      m.data_ = std::move(old);
      return m;
    }
    log << "note: " << path.string() << " describes a different run; starting fresh\n";
  }
  m.data_ = json{{"format", kManifestFormat},
                 {"version", kManifestVersion},
                 {"config", config},
                 {"inputs", input_hashes},
                 {"stages", json::object()}};
  m.save();
  return m;
}

bool Manifest::is_complete(const std::string& stage) const {
  const auto& stages = data_.at("stages");
  if (!stages.contains(stage) || !stages[stage].value("complete", false)) return false;
  for (const auto& [rel, hash] : stages[stage].at("outputs").items()) {
    const auto p = dir_ / rel;
    if (!std::filesystem::exists(p) || sha256_file(p) != hash.get<std::string>()) return false;
  }
  return true;
}

void Manifest::complete(const std::string& stage,
                        const std::vector<std::filesystem::path>& outputs) {
  json hashes = json::object();
  for (const auto& rel : outputs) hashes[rel.generic_string()] = sha256_file(dir_ / rel);
  data_["stages"][stage] = {{"complete", true}, {"outputs", hashes}};
  save();
}

void Manifest::save() const {
  const auto path = dir_ / kManifestFile;
  const auto tmp = dir_ / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot write " + tmp.string());
    out << data_.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

bool run_stage(Manifest& manifest, const std::string& stage, std::ostream& log,
               const std::function<std::vector<std::filesystem::path>()>& body) {
  if (manifest.is_complete(stage)) {
    log << "stage '" << stage << "' already complete in " << manifest.dir().string()
        << "; nothing to do\n";
    return false;
  }
  manifest.complete(stage, body());
  return true;
}

}  // namespace ragdx
