// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/core/json.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "ragdx/core/error.hpp"

namespace ragdx {

void to_json(json& j, const Embedding& e) {
  j = json{{"dtype", to_string(e.dtype())},
           {"values", std::vector<float>(e.values().begin(), e.values().end())}};
}

void from_json(const json& j, Embedding& e) {
  e = Embedding(j.at("values").get<std::vector<float>>(),
                parse_dtype(j.value("dtype", std::string("f32"))));
}

void to_json(json& j, const ClassVocab& v) { j = v.labels(); }

void from_json(const json& j, ClassVocab& v) { v = ClassVocab(j.get<std::vector<std::string>>()); }

void to_json(json& j, const IndexRecord& r) {
  j = json{{"id", raw(r.id)},
           {"image", r.image},
           {"text", r.text},
           {"payload_ref", r.payload_ref},
           {"source_tag", r.source_tag}};
}

void from_json(const json& j, IndexRecord& r) {
  r.id = RecordId{j.at("id").get<std::uint64_t>()};
  r.image = j.at("image").get<Embedding>();
  r.text = j.at("text").get<Embedding>();
  r.payload_ref = j.at("payload_ref").get<std::string>();
  r.source_tag = j.at("source_tag").get<std::string>();
}

void to_json(json& j, const Query& q) {
  j = json{{"query_id", q.id},
           {"image_emb", std::vector<float>(q.image.values().begin(), q.image.values().end())},
           {"question", q.question},
           {"gold_answer", q.gold_answer},
           {"class_vocab", q.vocab},
           {"task_kind", to_string(q.task)},
           {"payload_ref", q.payload_ref}};
}

void from_json(const json& j, Query& q) {
  q.id = j.at("query_id").get<std::string>();
  q.image = Embedding(j.at("image_emb").get<std::vector<float>>());
  q.question = j.value("question", std::string());
  q.gold_answer = j.at("gold_answer").get<std::string>();
  q.vocab = j.at("class_vocab").get<ClassVocab>();
  q.task = parse_task_kind(j.value("task_kind", std::string("classification")));
  q.payload_ref = j.value("payload_ref", std::string());
  q.validate();
}

void to_json(json& j, const Candidate& c) {
  j = json{{"record_id", raw(c.id)}, {"head", to_string(c.head)}, {"raw_score", c.raw_score}};
}

void from_json(const json& j, Candidate& c) {
  c.id = RecordId{j.at("record_id").get<std::uint64_t>()};
  c.head = parse_head(j.at("head").get<std::string>());
  c.raw_score = j.at("raw_score").get<double>();
}

void to_json(json& j, const CandidateSet& c) {
  j = json{{"query_id", c.query_id}, {"items", c.items}};
}

void from_json(const json& j, CandidateSet& c) {
  c.query_id = j.at("query_id").get<std::string>();
  c.items = j.at("items").get<std::vector<Candidate>>();
}

void to_json(json& j, const ReaderScoreTable& t) {
  json rows = json::array();
  for (const auto& [key, probs] : t.rows()) {
    rows.push_back({{"query_id", key.query_id},
                    {"record_id", raw(key.record)},
                    {"variant", to_string(key.variant)},
                    {"probs", probs}});
  }
  j = json{{"reader", t.reader_identity()}, {"vocab", t.vocab()}, {"rows", std::move(rows)}};
}

void from_json(const json& j, ReaderScoreTable& t) {
  ReaderScoreTable out(j.at("vocab").get<ClassVocab>(), j.at("reader").get<std::string>());
  for (const auto& row : j.at("rows")) {
    out.insert(ScoreKey{row.at("query_id").get<std::string>(),
                        RecordId{row.at("record_id").get<std::uint64_t>()},
                        parse_context_variant(row.at("variant").get<std::string>())},
               row.at("probs").get<std::vector<double>>());
  }
  t = std::move(out);
}

void write_format_header(std::ostream& out, std::string_view format, int version) {
  out << json{{"format", format}, {"version", version}}.dump() << '\n';
}

json parse_json_line(const std::string& line, const std::string& origin, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, origin + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

void expect_format_header(std::istream& in, std::string_view format, int version,
                          const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::TruncatedFile, origin + ": missing format header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    fail(Errc::BadMagic, origin + ": first line is not a format header");
  }
  if (!header.is_object() || header.value("format", std::string()) != format) {
    fail(Errc::BadMagic, origin + ": expected format '" + std::string(format) + "'");
  }
  if (header.value("version", -1) != version) {
    fail(Errc::VersionMismatch, origin + ": unsupported version " +
                                    std::to_string(header.value("version", -1)));
  }
}

namespace {
constexpr std::string_view kQueryFormat = "ragdx.queries";
constexpr int kQueryVersion = 1;
}  // namespace

void write_queries(std::span<const Query> queries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  write_format_header(out, kQueryFormat, kQueryVersion);
  for (const auto& q : queries) out << json(q).dump() << '\n';
  if (!out) fail(Errc::IoError, "failed writing " + path.string());
}

std::vector<Query> read_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ArtifactMissing, "query set not found: " + path.string());
  expect_format_header(in, kQueryFormat, kQueryVersion, path.string());
  std::vector<Query> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_json_line(line, path.string(), line_no).get<Query>());
    } catch (const json::exception& e) {
      fail(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ragdx
