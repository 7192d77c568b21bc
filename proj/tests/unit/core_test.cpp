// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/json.hpp"
#include "ragdx/core/payload.hpp"
#include "ragdx/core/rng.hpp"
#include "support.hpp"

namespace ragdx {
namespace {

using testing::emb;

template <typename Fn>
Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::InvariantViolation;
}

TEST(NormalizeDistribution, Examples) {
  const std::vector<double> a{2, 2};
  EXPECT_EQ(normalize_distribution(a), (std::vector<double>{0.5, 0.5}));
  const std::vector<double> b{1, 0, 0};
  EXPECT_EQ(normalize_distribution(b), (std::vector<double>{1, 0, 0}));
  const std::vector<double> c{0.9, 0.1};
  const auto out = normalize_distribution(c);
  EXPECT_NEAR(out[0], 0.9, 1e-15);
  EXPECT_NEAR(out[1], 0.1, 1e-15);
}

TEST(NormalizeDistribution, Errors) {
  const std::vector<double> zero{0, 0};
  EXPECT_EQ(error_of([&] { normalize_distribution(zero); }), Errc::AllZero);
  const std::vector<double> nan{1, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_EQ(error_of([&] { normalize_distribution(nan); }), Errc::NonFinite);
  const std::vector<double> inf{1, std::numeric_limits<double>::infinity()};
  EXPECT_EQ(error_of([&] { normalize_distribution(inf); }), Errc::NonFinite);
  const std::vector<double> neg{1, -0.5};
  EXPECT_EQ(error_of([&] { normalize_distribution(neg); }), Errc::NonFinite);
}

TEST(NormalizeDistribution, ProportionalAndSumsToOne) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(1 + rng.below(20));
    for (auto& x : w) x = rng.uniform() * std::pow(10.0, double(rng.below(12)) - 6.0);
    const auto p = normalize_distribution(w);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(p[i], w[i] / total, 1e-12);
  }
}

TEST(Softmax, ShiftInvarianceAndStability) {
  const std::vector<double> a{1000.0, 999.0};
  const std::vector<double> b{1.0, 0.0};
  const auto pa = softmax(a);
  const auto pb = softmax(b);
  EXPECT_NEAR(pa[0], pb[0], 1e-15);
  EXPECT_NEAR(pb[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  const std::vector<double> v{0.0, std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(v), std::log(4.0), 1e-15);
}

TEST(Argmax, LowestIndexWinsTies) {
  const std::vector<double> v{0.2, 0.4, 0.4};
  EXPECT_EQ(argmax(v), 1u);
  const std::vector<double> u{0.5, 0.5};
  EXPECT_EQ(argmax(u), 0u);
}

TEST(IsDistribution, Tolerance) {
  EXPECT_TRUE(is_distribution(std::vector<double>{0.5, 0.5 + 5e-7}));
  EXPECT_FALSE(is_distribution(std::vector<double>{0.5, 0.5 + 5e-6}));
  EXPECT_FALSE(is_distribution(std::vector<double>{1.2, -0.2}));
}

TEST(Embedding, RejectsNonFinite) {
  EXPECT_EQ(error_of([] { Embedding({1.0f, std::numeric_limits<float>::infinity()}); }),
            Errc::NonFinite);
  EXPECT_EQ(error_of([] { Embedding({std::numeric_limits<float>::quiet_NaN()}); }),
            Errc::NonFinite);
}

TEST(Embedding, DotChecksDimension) {
  EXPECT_DOUBLE_EQ(dot(emb({1, 2}), emb({3, 4})), 11.0);
  EXPECT_EQ(error_of([] { dot(emb({1, 2}), emb({1, 2, 3})); }), Errc::DimensionMismatch);
}

TEST(ClassVocab, Invariants) {
  EXPECT_EQ(error_of([] { ClassVocab(std::vector<std::string>{}); }), Errc::InvalidArgument);
  EXPECT_EQ(error_of([] { ClassVocab({"a", "a"}); }), Errc::InvalidArgument);
  const ClassVocab v({"yes", "no"});
  EXPECT_EQ(v.index_of("no"), 1u);
  EXPECT_FALSE(v.index_of("maybe"));
  EXPECT_NE(v, ClassVocab({"no", "yes"}));
}

TEST(Query, GoldMustBeInVocabForClosedTasks) {
  auto q = testing::class_query("q", {1, 0}, "maybe", {"yes", "no"});
  EXPECT_EQ(error_of([&] { q.validate(); }), Errc::InvalidArgument);
  q.task = TaskKind::vqa_open;
  EXPECT_NO_THROW(q.validate());
}

TEST(ReaderScoreTable, WriteOnce) {
  ReaderScoreTable t(ClassVocab({"a", "b"}), "r");
  const ScoreKey key{"q", RecordId{1}, ContextVariant::full};
  t.insert(key, {0.25, 0.75});
  t.insert(key, {0.25, 0.75});
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(error_of([&] { t.insert(key, {0.5, 0.5}); }), Errc::InvariantViolation);
  EXPECT_EQ(error_of([&] { t.insert({"q", RecordId{2}}, {0.5, 0.6}); }),
            Errc::InvariantViolation);
  EXPECT_EQ(error_of([&] { t.insert({"q", RecordId{3}}, {1.0}); }), Errc::VocabMismatch);
}

TEST(Enums, StringRoundTrip) {
  for (auto d : {DType::f32, DType::f16}) EXPECT_EQ(parse_dtype(to_string(d)), d);
  for (auto h : {Head::text, Head::image}) EXPECT_EQ(parse_head(to_string(h)), h);
  for (auto t : {TaskKind::classification, TaskKind::vqa_closed, TaskKind::vqa_open}) {
    EXPECT_EQ(parse_task_kind(to_string(t)), t);
  }
  for (auto v : {ContextVariant::full, ContextVariant::no_query_image,
                 ContextVariant::no_retrieval}) {
    EXPECT_EQ(parse_context_variant(to_string(v)), v);
  }
  EXPECT_EQ(error_of([] { parse_head("audio"); }), Errc::ParseError);
}

TEST(Json, CoreTypesRoundTrip) {
  SplitMix64 rng(3);
  const IndexRecord rec{RecordId{42}, testing::random_embedding(rng, 5),
                        testing::random_embedding(rng, 5), "synth:record/42?label=c1",
                        "corpus-a"};
  EXPECT_EQ(json(rec).get<IndexRecord>(), rec);

  auto q = testing::class_query("q1", {0.5f, -1.25f}, "no", {"yes", "no"});
  q.task = TaskKind::vqa_closed;
  q.payload_ref = "img/q1";
  EXPECT_EQ(json(q).get<Query>(), q);

  const CandidateSet cs{"q1", {{RecordId{3}, Head::text, 0.75}, {RecordId{1}, Head::image, 0.5}}};
  EXPECT_EQ(json(cs).get<CandidateSet>(), cs);

  ReaderScoreTable t(ClassVocab({"a", "b", "c"}), "sim");
  t.insert({"q1", RecordId{1}, ContextVariant::full}, {0.2, 0.3, 0.5});
  t.insert({"q1", RecordId{7}, ContextVariant::no_query_image}, {0.1, 0.1, 0.8});
  EXPECT_EQ(json(t).get<ReaderScoreTable>(), t);

  // Floats survive a text round trip exactly.
  const Embedding e({0.1f, 1e-30f, -3.4e38f});
  EXPECT_EQ(json::parse(json(e).dump()).get<Embedding>(), e);
}

TEST(Json, QueriesFileRoundTripAndHeader) {
  testing::TempDir dir("core");
  std::vector<Query> qs{testing::class_query("a", {1, 0}, "yes", {"yes", "no"}),
                        testing::class_query("b", {0, 1}, "no", {"yes", "no"})};
  write_queries(qs, dir / "q.jsonl");
  EXPECT_EQ(read_queries(dir / "q.jsonl"), qs);

  testing::spit(dir / "bad.jsonl", "{\"format\":\"ragdx.other\",\"version\":1}\n");
  EXPECT_EQ(error_of([&] { read_queries(dir / "bad.jsonl"); }), Errc::BadMagic);
  testing::spit(dir / "v2.jsonl", "{\"format\":\"ragdx.queries\",\"version\":2}\n");
  EXPECT_EQ(error_of([&] { read_queries(dir / "v2.jsonl"); }), Errc::VersionMismatch);
  EXPECT_EQ(error_of([&] { read_queries(dir / "missing.jsonl"); }), Errc::ArtifactMissing);
}

TEST(Payload, Params) {
  const std::string ref = "synth:record/3?label=c1&cluster=c2&flag";
  EXPECT_EQ(payload_locator(ref), "synth:record/3");
  EXPECT_EQ(payload_param(ref, "label"), "c1");
  EXPECT_EQ(payload_param(ref, "cluster"), "c2");
  EXPECT_EQ(payload_param(ref, "flag"), "");
  EXPECT_FALSE(payload_param(ref, "kind"));
  EXPECT_TRUE(payload_params("plain/locator").empty());
}

TEST(Rng, ReferenceValuesAndDeterminism) {
  // FNV-1a test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  // splitmix64 seeded with 0: first output of the reference implementation.
  SplitMix64 s(0);
  EXPECT_EQ(s.next(), 0xe220a8397b1dcdafULL);

  SplitMix64 a(99), b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  SplitMix64 u(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    EXPECT_GT(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2, 0), derive_seed(1, 2, 1));
}

TEST(Rng, NormalMoments) {
  SplitMix64 rng(17);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(ErrorStrings, EveryCodeHasAName) {
  for (int c = 0; c <= static_cast<int>(Errc::InvariantViolation); ++c) {
    EXPECT_FALSE(to_string(static_cast<Errc>(c)).empty());
  }
}

}  // namespace
}  // namespace ragdx
