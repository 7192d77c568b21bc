// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ragdx/index/index.hpp"

namespace ragdx {

inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::uint32_t kHeadVersion = 1;

/// Binary index file, little-endian:
///   "RGDX" u32 version, u32 dimension, u8 dtype, u64 count, then per record
///   u64 id, image[d], text[d] (f32 or f16 bits), u32 len + payload_ref,
///   u16 len + source_tag.
void write_index(const Index& index, const std::filesystem::path& path);

/// Throws BadMagic, VersionMismatch, TruncatedFile, or DimensionMismatch
/// when expected_dimension is given and differs from the file.
Index read_index(const std::filesystem::path& path,
                 std::optional<std::size_t> expected_dimension = std::nullopt);

/// Projection-head sidecar: "RGPH" u32 version, u8 head, u32 dimension,
/// f64 W row-major (d*d), f64 b (d).
void write_head(const ProjectionHead& head, const std::filesystem::path& path);
ProjectionHead read_head(const std::filesystem::path& path);

/// Round-trips a float through IEEE binary16 (round to nearest even).
float quantize_f16(float value);

struct IngestOptions {
  DType storage = DType::f32;
  /// L2-normalize both embeddings so dot product equals cosine similarity.
  bool normalize = false;
};

/// Line-delimited corpus text: header "#ragdx-corpus\t1", then one record per
/// line: id, image floats, text floats, payload_ref, source_tag separated by
/// tabs, floats separated by commas. Records may appear in any id order.
Index ingest_corpus(const std::filesystem::path& path, const IngestOptions& options = {});
void write_corpus(const Index& index, const std::filesystem::path& path);

}  // namespace ragdx
