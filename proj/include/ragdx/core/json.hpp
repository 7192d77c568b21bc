// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ragdx/core/error.hpp"
#include "ragdx/core/types.hpp"

namespace ragdx {

using json = nlohmann::json;

void to_json(json& j, const Embedding& e);
void from_json(const json& j, Embedding& e);
void to_json(json& j, const ClassVocab& v);
void from_json(const json& j, ClassVocab& v);
void to_json(json& j, const IndexRecord& r);
void from_json(const json& j, IndexRecord& r);
void to_json(json& j, const Query& q);
void from_json(const json& j, Query& q);
void to_json(json& j, const Candidate& c);
void from_json(const json& j, Candidate& c);
void to_json(json& j, const CandidateSet& c);
void from_json(const json& j, CandidateSet& c);
void to_json(json& j, const ReaderScoreTable& t);
void from_json(const json& j, ReaderScoreTable& t);

/// Every line-delimited file starts with {"format": ..., "version": ...}.
void write_format_header(std::ostream& out, std::string_view format, int version);

/// Reads and checks the header line. Throws BadMagic on a wrong format
/// name and VersionMismatch on a wrong version.
void expect_format_header(std::istream& in, std::string_view format, int version,
                          const std::string& origin);

/// Parses one line as JSON, rethrowing parse failures as ParseError with
/// origin and line number attached.
json parse_json_line(const std::string& line, const std::string& origin, std::size_t line_no);

/// Evaluation query sets: a format header, then one query per line.
void write_queries(std::span<const Query> queries, const std::filesystem::path& path);
std::vector<Query> read_queries(const std::filesystem::path& path);

}  // namespace ragdx
