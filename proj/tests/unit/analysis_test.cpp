// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include <gtest/gtest.h>

#include "ragdx/analysis/analysis.hpp"
#include "ragdx/analysis/metrics.hpp"
#include "ragdx/core/distribution.hpp"
#include "support.hpp"

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

using Labels = std::vector<std::string>;

PredictionRecord pred(std::string id, std::string predicted, std::string gold, Labels cands,
                      std::string mode = "fused") {
  PredictionRecord r;
  r.query_id = std::move(id);
  r.mode = std::move(mode);
  r.predicted = std::move(predicted);
  r.gold = std::move(gold);
  r.candidate_labels = std::move(cands);
  for (std::size_t i = 0; i < r.candidate_labels.size(); ++i) {
    r.candidate_ids.push_back(RecordId{i});
    r.candidate_scores.push_back(1.0 - 0.1 * double(i));
    r.candidate_dists.push_back(r.candidate_labels[i] == "A" ? std::vector<double>{0.7, 0.3}
                                                             : std::vector<double>{0.4, 0.6});
  }
  return r;
}

TEST(Metrics, Examples) {
  const Labels all_gold{"A", "B", "C", "A"};
  const auto perfect = metrics(all_gold, all_gold, TaskKind::classification);
  EXPECT_EQ(perfect.acc, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);
  EXPECT_EQ(perfect.count, 4u);

  const Labels gold{"A", "A", "B", "B"}, predicted{"A", "B", "B", "B"};
  const auto m = metrics(predicted, gold, TaskKind::classification);
  EXPECT_DOUBLE_EQ(m.acc, 0.75);
  // Hand confusion matrix: A has P=1, R=1/2; B has P=2/3, R=1.
  const double f1_a = 2.0 / 3.0, f1_b = 0.8;
  EXPECT_NEAR(m.macro_f1, (f1_a + f1_b) / 2.0, 1e-15);
  EXPECT_NEAR(m.macro_f1, 0.7333, 1e-4);
  ASSERT_EQ(m.per_class.size(), 2u);
  EXPECT_EQ(m.per_class[0].label, "A");
  EXPECT_DOUBLE_EQ(m.per_class[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(m.per_class[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(m.per_class[1].precision, 2.0 / 3.0);
  EXPECT_EQ(m.per_class[1].support, 2u);

  const auto t = token_scores("lung", "left lung");
  EXPECT_DOUBLE_EQ(t.precision, 1.0);
  EXPECT_DOUBLE_EQ(t.recall, 0.5);
  EXPECT_NEAR(t.f1, 2.0 / 3.0, 1e-15);
}

TEST(Metrics, ZeroOverZeroConvention) {
  const Labels gold{"A"}, predicted{"B"};
  const auto m = metrics(predicted, gold, TaskKind::classification);
  EXPECT_EQ(m.acc, 0.0);
  EXPECT_EQ(m.macro_f1, 0.0);
  EXPECT_EQ(token_scores("", "x").f1, 0.0);
  EXPECT_EQ(token_scores("", "").f1, 0.0);
}

TEST(Metrics, TokenSetsNormalize) {
  EXPECT_EQ(token_set("  Left  LUNG left\tlung\n"), (std::set<std::string>{"left", "lung"}));
  const auto t = token_scores("Right lung base", "left LUNG");
  EXPECT_DOUBLE_EQ(t.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.recall, 0.5);
}

TEST(Metrics, TaskSpecificFields) {
  const Labels gold{"Yes", "no"}, predicted{"yes ", "no"};
  const auto closed = metrics(predicted, gold, TaskKind::vqa_closed);
  ASSERT_TRUE(closed.exact_match);
  EXPECT_EQ(*closed.exact_match, 1.0);
  EXPECT_FALSE(closed.tokens);

  const Labels answers{"left lung", "heart"}, refs{"lung", "enlarged heart"};
  const auto open = metrics(answers, refs, TaskKind::vqa_open);
  ASSERT_TRUE(open.tokens);
  EXPECT_DOUBLE_EQ(open.tokens->precision, (0.5 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(open.tokens->recall, (1.0 + 0.5) / 2);
  EXPECT_DOUBLE_EQ(open.tokens->f1, 2.0 / 3.0);
}

TEST(Metrics, Errors) {
  const Labels none;
  EXPECT_EQ(error_of([&] { metrics(none, none, TaskKind::classification); }), Errc::EmptyEvalSet);
  const Labels one{"A"}, two{"A", "B"};
  EXPECT_EQ(error_of([&] { metrics(one, two, TaskKind::classification); }), Errc::LengthMismatch);
}

TEST(Metrics, PermutationInvariantAndBounded) {
  SplitMix64 rng(40);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    Labels g(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = std::string(1, char('A' + rng.below(4)));
      p[i] = rng.below(3) ? g[i] : std::string(1, char('A' + rng.below(4)));
    }
    const auto m = metrics(p, g, TaskKind::classification);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    Labels gp, pp;
    for (auto i : perm) gp.push_back(g[i]), pp.push_back(p[i]);
    const auto m2 = metrics(pp, gp, TaskKind::classification);
    EXPECT_DOUBLE_EQ(m.acc, m2.acc);
    EXPECT_DOUBLE_EQ(m.macro_f1, m2.macro_f1);
    EXPECT_GE(m.macro_f1, 0.0);
    EXPECT_LE(m.macro_f1, 1.0);
  }
}

TEST(Metrics, MultiLabelMacroF1) {
  // Label 0: tp 1, fp 1, fn 0 -> F1 2/3. Label 1: tp 1, fn 1 -> F1 2/3. Label 2: never -> 0.
  const std::vector<std::vector<bool>> gold{{true, true, false}, {false, true, false}};
  const std::vector<std::vector<bool>> predicted{{true, true, false}, {true, false, false}};
  EXPECT_NEAR(multilabel_macro_f1(predicted, gold), (2.0 / 3 + 2.0 / 3 + 0.0) / 3, 1e-15);
}

TEST(SplitConsistency, Examples) {
  const std::vector<PredictionRecord> preds{pred("q1", "A", "A", {"A", "A", "A", "A"}),
                                            pred("q2", "A", "A", {"A", "B", "A", "A"}),
                                            pred("q3", "A", "B", {"A"})};
  const auto s = split_consistency(preds);
  EXPECT_EQ(s.tags.at("q1"), Split::consistent);
  EXPECT_EQ(s.tags.at("q2"), Split::inconsistent);
  EXPECT_EQ(s.tags.at("q3"), Split::consistent);
  EXPECT_EQ(s.count(Split::consistent) + s.count(Split::inconsistent), 3u);
  EXPECT_NEAR(s.inconsistent_proportion(), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(s.labels.at("q2"), (Labels{"A", "B", "A", "A"}));

  const std::vector<PredictionRecord> missing{pred("q", "A", "A", {})};
  EXPECT_EQ(error_of([&] { split_consistency(missing); }), Errc::MissingCandidates);
  const std::vector<PredictionRecord> dup{pred("q", "A", "A", {"A"}), pred("q", "A", "A", {"A"})};
  EXPECT_EQ(error_of([&] { split_consistency(dup); }), Errc::InvalidArgument);
}

TEST(Oracle, Examples) {
  const std::vector<PredictionRecord> hit{pred("q", "B", "A", {"A", "B"})};
  EXPECT_EQ(oracle_eval(hit).acc, 1.0);
  const std::vector<PredictionRecord> miss{pred("q", "B", "A", {"B", "C"})};
  EXPECT_EQ(oracle_eval(miss).acc, 0.0);
  // A miss keeps the fused label in the confusion matrix.
  EXPECT_EQ(oracle_outcomes(miss)[0].predicted, "B");

  auto open = pred("q", "x", "y", {"x"});
  open.task = TaskKind::vqa_open;
  const std::vector<PredictionRecord> opens{open};
  EXPECT_EQ(error_of([&] { oracle_eval(opens); }), Errc::UnsupportedTask);
}

class GoldPicker final : public Reranker {
 public:
  explicit GoldPicker(const std::vector<PredictionRecord>& preds) {
    for (const auto& p : preds) {
      auto it = std::find(p.candidate_labels.begin(), p.candidate_labels.end(), p.gold);
      picks_[p.query_id] = it == p.candidate_labels.end() ? 0 : std::size_t(it - p.candidate_labels.begin());
    }
  }
  std::string name() const override { return "gold"; }
  std::size_t choose(const RerankInput& in) const override { return picks_.at(std::string(in.query_id)); }

 private:
  std::map<std::string, std::size_t> picks_;
};

std::vector<PredictionRecord> random_dump(SplitMix64& rng, std::size_t n, bool fused_in_candidates) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    Labels cands(1 + rng.below(4));
    for (auto& c : cands) c = rng.below(2) ? "A" : "B";
    const std::string gold = rng.below(2) ? "A" : "B";
    const std::string fused = fused_in_candidates ? cands[rng.below(cands.size())]
                                                  : (rng.below(2) ? "A" : "B");
    out.push_back(pred("q" + std::to_string(i), fused, gold, cands));
  }
  return out;
}

TEST(Rerank, GoldPickerMatchesOracle) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dump = random_dump(rng, 30, true);
    const GoldPicker picker(dump);
    EXPECT_DOUBLE_EQ(rerank_eval(dump, picker).acc, oracle_eval(dump).acc);
  }
}

TEST(Rerank, Top1OnSingleCandidateEqualsTop1Mode) {
  SplitMix64 rng(4);
  auto dump = random_dump(rng, 30, true);
  for (auto& p : dump) {
    p.candidate_labels.resize(1);
    p.candidate_dists.resize(1);
    p.candidate_scores.resize(1);
    p.predicted = p.candidate_labels[0];
  }
  const Top1SimilarityReranker top1;
  const auto a = rerank_outcomes(dump, top1);
  const auto b = outcomes(dump);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].predicted, b[i].predicted);
}

TEST(Rerank, ChoiceOutOfRange) {
  const std::vector<PredictionRecord> dump{pred("q", "A", "A", {"A", "B"})};
  const ExternalReranker ext({{"q", 2}});
  EXPECT_EQ(error_of([&] { rerank_eval(dump, ext); }), Errc::ChoiceOutOfRange);
}

TEST(OracleDominance, HoldsOnRandomDumps) {
  SplitMix64 rng(9);
  const Top1SimilarityReranker top1;
  const TopLogitReranker logit;
  for (int trial = 0; trial < 50; ++trial) {
    const auto dump = random_dump(rng, 25, trial % 2 == 0);
    const GoldPicker picker(dump);
    const std::vector<const Reranker*> rr{&top1, &logit, &picker};
    EXPECT_NO_THROW(assert_oracle_dominance(dump, rr));
    const double oracle = oracle_eval(dump).acc;
    EXPECT_GE(oracle, evaluate(outcomes(dump)).acc);
    for (const auto* r : rr) EXPECT_GE(oracle, rerank_eval(dump, *r).acc);
  }
}

TEST(Consistency, ConsistentQueriesAgreeAcrossModes) {
  // Rows sharing an argmax: every convex mix and every chooser keep it.
  SplitMix64 rng(14);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(5), c = 2 + rng.below(3), label = rng.below(c);
    std::vector<std::vector<double>> rows;
    while (rows.size() < n) {
      std::vector<double> r(c);
      for (auto& x : r) x = rng.uniform();
      r = normalize_distribution(r);
      if (argmax(r) == label) rows.push_back(r);
    }
    std::vector<double> s(n);
    for (auto& x : s) x = rng.normal();
    EXPECT_EQ(fuse(rows, retrieval_weights(s)).label, label);
    EXPECT_EQ(argmax(rows[most_confident(rows)]), label);
    EXPECT_EQ(argmax(rows[Top1SimilarityReranker().choose({"q", s, rows})]), label);
  }
}

TEST(Report, AnalyzeAndCompare) {
  const std::vector<PredictionRecord> before{pred("q1", "A", "A", {"A", "A"}),
                                             pred("q2", "B", "A", {"A", "B"}),
                                             pred("q3", "B", "B", {"B", "B"}),
                                             pred("q4", "A", "B", {"A", "B"})};
  const std::vector<PredictionRecord> after{pred("q1", "A", "A", {"A", "A"}),
                                            pred("q2", "A", "A", {"A", "A"}),
                                            pred("q3", "B", "B", {"B", "B"}),
                                            pred("q4", "B", "B", {"B", "A"})};
  const auto r = compare(before, after);
  EXPECT_EQ(r.consistent, 2u);
  EXPECT_EQ(r.inconsistent, 2u);
  for (const char* name : {"before", "after", "before/oracle", "after/oracle"}) {
    ASSERT_NE(r.find(name), nullptr) << name;
  }
  EXPECT_EQ(r.find("before")->inconsistent->acc, 0.0);
  EXPECT_EQ(r.find("after")->inconsistent->acc, 1.0);
  EXPECT_EQ(r.find("before")->consistent->acc, 1.0);
  EXPECT_EQ(r.find("before/oracle")->inconsistent->acc, 1.0);

  const std::string table = r.to_table();
  EXPECT_NE(table.find("before/oracle"), std::string::npos);
  const json j = r.to_json();
  EXPECT_EQ(j.at("format"), "ragdx.report");

  const Top1SimilarityReranker top1;
  const std::vector<const Reranker*> rr{&top1};
  const auto a = analyze({{"untrained", before}, {"trained", after}}, 0, rr, 1);
  EXPECT_NE(a.find("trained/top1_similarity"), nullptr);
  EXPECT_NE(a.find("untrained/oracle"), nullptr);

  testing::TempDir dir("report");
  write_report(r, dir / "r.json", dir / "r.txt");
  EXPECT_EQ(json::parse(testing::slurp(dir / "r.json")), j);
  EXPECT_EQ(testing::slurp(dir / "r.txt"), table);
}

}  // namespace
}  // namespace ragdx
