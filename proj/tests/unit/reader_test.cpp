// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include <gtest/gtest.h>

#include "ragdx/core/distribution.hpp"
#include "ragdx/reader/cached.hpp"
#include "ragdx/reader/remote.hpp"
#include "ragdx/reader/simulated.hpp"
#include "support.hpp"

#include <httplib.h>  // after Eigen: its macros clash with Eigen's kernels

namespace ragdx {
namespace {

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

IndexRecord labelled(std::uint64_t id, const std::string& label, const std::string& cluster = "") {
  std::string ref = "synth:record/" + std::to_string(id) + "?label=" + label;
  if (!cluster.empty()) ref += "&cluster=" + cluster;
  ref += "&caption=about " + label;
  return testing::record(id, {1, 0}, {0, 1}, ref);
}

Query binary_query(const std::string& id, const std::string& gold) {
  auto q = testing::class_query(id, {1, 0}, gold, {"yes", "no"});
  q.payload_ref = "img/" + id;
  return q;
}

TEST(SimulatedReader, InformativenessLimits) {
  SimulatedReaderParams full;
  full.alpha = 1.0;
  const SimulatedReader sharp(full, 2);
  const auto p = sharp.score_candidate(binary_query("q", "yes"), labelled(1, "yes"));
  EXPECT_EQ(p, (std::vector<double>{1.0, 0.0}));

  SimulatedReaderParams none;
  none.alpha = 0.0;
  const SimulatedReader flat(none, 2);
  const auto u = flat.score_candidate(binary_query("q", "yes"), labelled(1, "no"));
  EXPECT_NEAR(u[0], 0.5, 1e-15);
  EXPECT_NEAR(u[1], 0.5, 1e-15);
}

TEST(SimulatedReader, MixtureMatchesClosedForm) {
  SimulatedReaderParams p;
  p.alpha = 0.6;
  p.confusion = SimulatedReaderParams::diagonal_confusion(3, 0.5);
  p.unrelated_weight = 0.25;
  const SimulatedReader reader(p, 3);
  auto q = testing::class_query("q", {1, 0}, "a", {"a", "b", "c"});
  // prior = [0.5, 0.25, 0.25]; related record labelled b pulls with 0.6.
  const auto related = reader.score_candidate(q, labelled(1, "b", "a"));
  EXPECT_NEAR(related[0], 0.4 * 0.5, 1e-12);
  EXPECT_NEAR(related[1], 0.4 * 0.25 + 0.6, 1e-12);
  EXPECT_NEAR(related[2], 0.4 * 0.25, 1e-12);
  // Unrelated record: trust 0.6 * 0.25 = 0.15.
  const auto unrelated = reader.score_candidate(q, labelled(2, "b", "c"));
  EXPECT_NEAR(unrelated[1], 0.85 * 0.25 + 0.15, 1e-12);
  // Without the query image the prior is uniform and the record is trusted.
  const auto blind = reader.score_candidate(q, labelled(2, "b", "c"), ContextVariant::no_query_image);
  EXPECT_NEAR(blind[0], 0.4 / 3.0, 1e-12);
  EXPECT_NEAR(blind[1], 0.4 / 3.0 + 0.6, 1e-12);
  // Alone: the prior itself.
  const auto alone = reader.score_alone(q);
  EXPECT_NEAR(alone[0], 0.5, 1e-12);
}

TEST(SimulatedReader, GoldProbabilityMonotoneInAlpha) {
  auto q = testing::class_query("q7", {1, 0}, "b", {"a", "b", "c", "d"});
  double previous = -1.0;
  for (int step = 0; step <= 20; ++step) {
    SimulatedReaderParams p;
    p.alpha = step / 20.0;
    p.confusion = SimulatedReaderParams::diagonal_confusion(4, 0.4);
    p.query_noise = 0.8;
    p.pair_noise = 0.3;
    p.seed = 5;
    const SimulatedReader reader(p, 4);
    const double gold = reader.score_candidate(q, labelled(3, "b"))[1];
    EXPECT_GE(gold, previous - 1e-12) << "alpha " << p.alpha;
    previous = gold;
  }
}

TEST(SimulatedReader, ValidDistributionsAndDeterminism) {
  SimulatedReaderParams p;
  p.alpha = 0.7;
  p.query_noise = 1.0;
  p.pair_noise = 0.5;
  p.seed = 9;
  const SimulatedReader a(p, 2), b(p, 2);
  for (int i = 0; i < 50; ++i) {
    const auto q = binary_query("q" + std::to_string(i), i % 2 ? "yes" : "no");
    const auto r = labelled(std::uint64_t(i), i % 3 ? "yes" : "no");
    const auto pa = a.score_candidate(q, r);
    EXPECT_TRUE(is_distribution(pa));
    EXPECT_EQ(pa, b.score_candidate(q, r));
  }
  EXPECT_EQ(a.identity(), b.identity());
  p.seed = 10;
  EXPECT_NE(SimulatedReader(p, 2).identity(), a.identity());
}

TEST(SimulatedReader, Errors) {
  SimulatedReaderParams bad;
  bad.alpha = 1.5;
  EXPECT_EQ(error_of([&] { SimulatedReader(bad, 2); }), Errc::ConfigInvalid);
  SimulatedReaderParams rows;
  rows.confusion = {{0.5, 0.6}, {0.5, 0.5}};
  EXPECT_EQ(error_of([&] { SimulatedReader(rows, 2); }), Errc::ConfigInvalid);

  const SimulatedReader reader({}, 2);
  auto open = binary_query("o", "yes");
  open.task = TaskKind::vqa_open;
  EXPECT_EQ(error_of([&] { reader.score_candidate(open, labelled(1, "yes")); }),
            Errc::OpenQuestionUnsupported);
  EXPECT_EQ(error_of([&] { reader.score_candidate(binary_query("q", "yes"), labelled(1, "zzz")); }),
            Errc::InvalidArgument);
  auto three = testing::class_query("t", {1, 0}, "a", {"a", "b", "c"});
  EXPECT_EQ(error_of([&] { reader.score_alone(three); }), Errc::VocabMismatch);
}

TEST(BatchScore, CardinalityAndDeterminism) {
  const SimulatedReader reader({0.8, {}, 3, 0.5, 0.5, 0.1}, 2);
  const std::vector<Query> qs{binary_query("a", "yes"), binary_query("b", "no")};
  const std::vector<IndexRecord> rs{labelled(1, "yes"), labelled(2, "no")};
  std::vector<ScorePair> pairs;
  for (const auto& q : qs)
    for (const auto& r : rs) pairs.push_back({&q, &r, ContextVariant::full});
  const auto one = batch_score(reader, pairs, 1);
  EXPECT_EQ(one.table.size(), 4u);
  EXPECT_TRUE(one.errors.empty());
  EXPECT_EQ(batch_score(reader, pairs, 3).table, one.table);
  std::reverse(pairs.begin(), pairs.end());
  EXPECT_EQ(batch_score(reader, pairs, 1).table, one.table);
}

class FailingReader final : public Reader {
 public:
  std::string identity() const override { return "failing"; }

 protected:
  std::vector<double> do_score(const Query&, const IndexRecord* record, ContextVariant) const override {
    if (record && raw(record->id) == 2) fail(Errc::RemoteUnavailable, "down");
    return {0.5, 0.5};
  }
};

TEST(BatchScore, RowErrorsAreIsolated) {
  const FailingReader reader;
  const std::vector<Query> qs{binary_query("a", "yes"), binary_query("b", "no")};
  const std::vector<IndexRecord> rs{labelled(1, "yes"), labelled(2, "no")};
  std::vector<ScorePair> pairs;
  for (const auto& q : qs)
    for (const auto& r : rs) pairs.push_back({&q, &r, ContextVariant::full});
  const auto out = batch_score(reader, pairs);
  EXPECT_EQ(out.table.size(), 2u);
  ASSERT_EQ(out.errors.size(), 2u);
  EXPECT_EQ(out.errors[0].key.query_id, "a");
  EXPECT_EQ(raw(out.errors[0].key.record), 2u);
  EXPECT_EQ(out.errors[0].code, Errc::RemoteUnavailable);
}

TEST(Cache, RoundTripAndValidation) {
  testing::TempDir dir("cache");
  ReaderScoreTable t(ClassVocab({"a", "b"}), "sim:1");
  t.insert({"q1", RecordId{1}, ContextVariant::full}, {0.1, 0.9});
  t.insert({"q1", kNoRecord, ContextVariant::no_retrieval}, {0.5, 0.5});
  t.insert({"q2", RecordId{3}, ContextVariant::no_query_image}, {1.0 / 3.0, 2.0 / 3.0});
  cache_store(t, dir / "c.jsonl");
  EXPECT_EQ(cache_load(dir / "c.jsonl"), t);
  EXPECT_EQ(cache_load(dir / "c.jsonl", ClassVocab({"a", "b"})), t);
  EXPECT_EQ(error_of([&] { cache_load(dir / "c.jsonl", ClassVocab({"a", "b", "c"})); }),
            Errc::VocabMismatch);

  std::string text = testing::slurp(dir / "c.jsonl");
  const auto pos = text.find("[0.1,0.9]");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "[0.3,0.9]");
  testing::spit(dir / "tampered.jsonl", text);
  EXPECT_EQ(error_of([&] { cache_load(dir / "tampered.jsonl"); }), Errc::CorruptCache);

  testing::spit(dir / "garbage.jsonl", testing::slurp(dir / "c.jsonl") + "{not json\n");
  EXPECT_EQ(error_of([&] { cache_load(dir / "garbage.jsonl"); }), Errc::CorruptCache);
  EXPECT_EQ(error_of([&] { cache_load(dir / "none.jsonl"); }), Errc::ArtifactMissing);
}

TEST(CachedReader, ExtensionallyEqualOnCachedDomain) {
  SimulatedReaderParams p;
  p.alpha = 0.6;
  p.query_noise = 0.7;
  p.pair_noise = 0.2;
  auto live = std::make_shared<SimulatedReader>(p, 2);
  const std::vector<Query> qs{binary_query("a", "yes"), binary_query("b", "no")};
  const std::vector<IndexRecord> rs{labelled(1, "yes"), labelled(2, "no"), labelled(3, "yes")};

  CachedReader filling(ReaderScoreTable(ClassVocab({"yes", "no"}), live->identity()), live);
  for (const auto& q : qs) {
    for (const auto& r : rs) EXPECT_EQ(filling.score_candidate(q, r), live->score_candidate(q, r));
    EXPECT_EQ(filling.score_alone(q), live->score_alone(q));
  }
  EXPECT_EQ(filling.misses(), 8u);
  const auto table = filling.snapshot();
  EXPECT_EQ(table.size(), 8u);

  const CachedReader offline(table);
  for (const auto& q : qs)
    for (const auto& r : rs) EXPECT_EQ(offline.score_candidate(q, r), live->score_candidate(q, r));
  EXPECT_EQ(error_of([&] { offline.score_candidate(qs[0], labelled(9, "no")); }), Errc::CacheMiss);
  EXPECT_EQ(offline.snapshot(), table);

  const SimulatedReader other({}, 2);
  EXPECT_EQ(error_of([&] { CachedReader(table, std::make_shared<SimulatedReader>(other)); }),
            Errc::InvalidArgument);
}

// Minimal stand-in for a reader server.
class FakeServer {
 public:
  using Handler = std::function<void(const json&, httplib::Response&)>;

  explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      handler_(json::parse(req.body), res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_; }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
};

RemoteReaderConfig fast_config(const std::string& endpoint) {
  RemoteReaderConfig c;
  c.endpoint = endpoint;
  c.timeout = std::chrono::milliseconds(2000);
  c.backoff = std::chrono::milliseconds(1);
  return c;
}

TEST(RemoteReader, ExponentiatesAndRenormalizes) {
  FakeServer server([](const json&, httplib::Response& res) {
    res.set_content(json{{"log_probs", {2.0, 0.0}}}.dump(), "application/json");
  });
  const RemoteReader reader(fast_config(server.endpoint()));
  EXPECT_TRUE(reader.healthy());
  const auto p = reader.score_candidate(binary_query("q", "yes"), labelled(1, "yes"));
  EXPECT_NEAR(p[0], std::exp(2.0) / (std::exp(2.0) + 1.0), 1e-12);
  EXPECT_NEAR(p[0], 0.8808, 5e-5);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
}

TEST(RemoteReader, RequestFollowsWireProtocol) {
  json seen;
  FakeServer server([&](const json& req, httplib::Response& res) {
    seen = req;
    res.set_content(R"({"log_probs":[-0.5,-1.0]})", "application/json");
  });
  const RemoteReader reader(fast_config(server.endpoint()));
  auto q = binary_query("q9", "no");
  q.question = "is it?";
  reader.score_candidate(q, labelled(12, "yes"));
  EXPECT_EQ(seen.at("query_id"), "q9");
  EXPECT_EQ(seen.at("question"), "is it?");
  EXPECT_EQ(seen.at("query_payload_ref"), "img/q9");
  EXPECT_EQ(seen.at("candidate").at("record_id"), 12);
  EXPECT_EQ(seen.at("candidate").at("caption"), "about yes");
  EXPECT_EQ(seen.at("class_labels"), (json{"yes", "no"}));

  reader.score_candidate(q, labelled(12, "yes"), ContextVariant::no_query_image);
  EXPECT_EQ(seen.at("query_payload_ref"), "");
  EXPECT_EQ(error_of([&] { reader.score_alone(q); }), Errc::UnsupportedMode);
}

TEST(RemoteReader, FaultInjectionReportsOneRowError) {
  FakeServer server([](const json& req, httplib::Response& res) {
    if (req.at("query_id") == "b" && req.at("candidate").at("record_id") == 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"log_probs":[0.0,0.0]})", "application/json");
  });
  const RemoteReader reader(fast_config(server.endpoint()));
  const std::vector<Query> qs{binary_query("a", "yes"), binary_query("b", "no")};
  const std::vector<IndexRecord> rs{labelled(1, "yes"), labelled(2, "no")};
  std::vector<ScorePair> pairs;
  for (const auto& q : qs)
    for (const auto& r : rs) pairs.push_back({&q, &r, ContextVariant::full});
  const auto out = batch_score(reader, pairs, 2);
  EXPECT_EQ(out.table.size(), 3u);
  ASSERT_EQ(out.errors.size(), 1u);
  EXPECT_EQ(out.errors[0].key.query_id, "b");
  EXPECT_EQ(raw(out.errors[0].key.record), 2u);
  EXPECT_EQ(out.errors[0].code, Errc::RemoteUnavailable);
  // 3 good rows, 1 first attempt plus 2 retries for the failing one.
  EXPECT_EQ(server.calls(), 6);
}

TEST(RemoteReader, RetriesTransientFailures) {
  std::atomic<int> n{0};
  FakeServer server([&](const json&, httplib::Response& res) {
    if (n++ < 2) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"log_probs":[0.0,0.0]})", "application/json");
  });
  const RemoteReader reader(fast_config(server.endpoint()));
  EXPECT_EQ(reader.score_candidate(binary_query("q", "yes"), labelled(1, "yes")),
            (std::vector<double>{0.5, 0.5}));
}

TEST(RemoteReader, MalformedResponses) {
  for (const std::string body :
       {"not json", R"({"probs":[0,0]})", R"({"log_probs":[0.0]})", R"({"log_probs":[0.0,"x"]})",
        R"({"log_probs":[0.0,null]})"}) {
    FakeServer server([&](const json&, httplib::Response& res) {
      res.set_content(body, "application/json");
    });
    const RemoteReader reader(fast_config(server.endpoint()));
    EXPECT_EQ(error_of([&] { reader.score_candidate(binary_query("q", "yes"), labelled(1, "yes")); }),
              Errc::RemoteMalformedResponse)
        << body;
  }
  FakeServer rejecting([](const json&, httplib::Response& res) { res.status = 400; });
  const RemoteReader reader(fast_config(rejecting.endpoint()));
  EXPECT_EQ(error_of([&] { reader.score_candidate(binary_query("q", "yes"), labelled(1, "yes")); }),
            Errc::RemoteMalformedResponse);
  EXPECT_EQ(rejecting.calls(), 1);
}

TEST(RemoteReader, UnreachableServer) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  const RemoteReader reader(fast_config("http://127.0.0.1:" + std::to_string(port)));
  EXPECT_FALSE(reader.healthy());
  EXPECT_EQ(error_of([&] { reader.score_candidate(binary_query("q", "yes"), labelled(1, "yes")); }),
            Errc::RemoteUnavailable);
}

TEST(RemoteReader, ConfigValidation) {
  EXPECT_EQ(error_of([] { RemoteReader(fast_config("localhost:80")); }), Errc::ConfigInvalid);
  auto c = fast_config("http://127.0.0.1:1");
  c.timeout = std::chrono::milliseconds(0);
  EXPECT_EQ(error_of([&] { RemoteReader{c}; }), Errc::ConfigInvalid);
  c = fast_config("http://127.0.0.1:1");
  c.max_in_flight = 0;
  EXPECT_EQ(error_of([&] { RemoteReader{c}; }), Errc::ConfigInvalid);
}

TEST(RemoteReader, MatchesSimulatedReaderThroughProtocol) {
  // A server that mirrors the in-process simulated reader over the wire.
  SimulatedReaderParams p;
  p.alpha = 0.7;
  p.query_noise = 0.8;
  p.pair_noise = 0.1;
  p.seed = 4;
  const SimulatedReader sim(p, 2);
  FakeServer server([&](const json& req, httplib::Response& res) {
    Query q = binary_query(req.at("query_id"), "yes");
    q.vocab = ClassVocab(req.at("class_labels").get<std::vector<std::string>>());
    q.payload_ref = req.at("query_payload_ref");
    const auto& c = req.at("candidate");
    IndexRecord r = testing::record(c.at("record_id"), {0, 0}, {0, 0}, c.at("payload_ref"));
    const auto variant =
        q.payload_ref.empty() ? ContextVariant::no_query_image : ContextVariant::full;
    if (q.payload_ref.empty()) q.payload_ref = "img/" + q.id;
    const auto probs = sim.score_candidate(q, r, variant);
    json logp = json::array();
    for (double x : probs) logp.push_back(std::log(x));
    res.set_content(json{{"log_probs", logp}}.dump(), "application/json");
  });
  const RemoteReader remote(fast_config(server.endpoint()));
  for (int i = 0; i < 20; ++i) {
    const auto q = binary_query("q" + std::to_string(i), "yes");
    const auto r = labelled(std::uint64_t(i), i % 2 ? "yes" : "no");
    for (auto v : {ContextVariant::full, ContextVariant::no_query_image}) {
      const auto a = remote.score_candidate(q, r, v);
      const auto b = sim.score_candidate(q, r, v);
      EXPECT_NEAR(a[0], b[0], 1e-9);
    }
  }
}

}  // namespace
}  // namespace ragdx
