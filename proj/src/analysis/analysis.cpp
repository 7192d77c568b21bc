// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/analysis/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace ragdx {

std::string_view to_string(Split s) noexcept {
  return s == Split::consistent ? "consistent" : "inconsistent";
}

std::size_t ConsistencySplit::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(tags.begin(), tags.end(), [s](const auto& kv) { return kv.second == s; }));
}

double ConsistencySplit::inconsistent_proportion() const {
  return tags.empty() ? 0.0 : double(count(Split::inconsistent)) / double(tags.size());
}

ConsistencySplit split_consistency(std::span<const PredictionRecord> predictions) {
  ConsistencySplit out;
  for (const auto& p : predictions) {
    if (p.candidate_labels.empty()) {
      fail(Errc::MissingCandidates, "query " + p.query_id + " has no candidate labels");
    }
    const std::set<std::string> distinct(p.candidate_labels.begin(), p.candidate_labels.end());
    const Split s = distinct.size() >= 2 ? Split::inconsistent : Split::consistent;
    if (!out.tags.emplace(p.query_id, s).second) {
      fail(Errc::InvalidArgument, "query " + p.query_id + " appears twice");
    }
    out.labels.emplace(p.query_id, p.candidate_labels);
  }
  return out;
}

std::vector<Outcome> outcomes(std::span<const PredictionRecord> predictions) {
  std::vector<Outcome> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back({p.query_id, p.predicted, p.gold, p.task});
  return out;
}

std::vector<Outcome> oracle_outcomes(std::span<const PredictionRecord> predictions) {
  std::vector<Outcome> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    if (p.task == TaskKind::vqa_open) {
      fail(Errc::UnsupportedTask, "oracle is undefined for open-ended query " + p.query_id);
    }
    const bool hit = p.predicted == p.gold ||
                     std::find(p.candidate_labels.begin(), p.candidate_labels.end(), p.gold) !=
                         p.candidate_labels.end();
    out.push_back({p.query_id, hit ? p.gold : p.predicted, p.gold, p.task});
  }
  return out;
}

std::vector<Outcome> rerank_outcomes(std::span<const PredictionRecord> predictions,
                                     const Reranker& reranker) {
  std::vector<Outcome> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    const std::size_t pick = reranker.choose({p.query_id, p.candidate_scores, p.candidate_dists});
    if (pick >= p.candidate_labels.size()) {
      fail(Errc::ChoiceOutOfRange, reranker.name() + " chose candidate " + std::to_string(pick) +
                                       " of " + std::to_string(p.candidate_labels.size()) +
                                       " for query " + p.query_id);
    }
    out.push_back({p.query_id, p.candidate_labels[pick], p.gold, p.task});
  }
  return out;
}

MetricReport evaluate(std::span<const Outcome> rows) {
  if (rows.empty()) fail(Errc::EmptyEvalSet, "no predictions to evaluate");
  std::vector<std::string> pred, gold;
  for (const auto& r : rows) {
    if (r.task != rows.front().task) fail(Errc::InvalidArgument, "mixed task kinds in one report");
    pred.push_back(r.predicted);
    gold.push_back(r.gold);
  }
  return metrics(pred, gold, rows.front().task);
}

MetricReport oracle_eval(std::span<const PredictionRecord> predictions) {
  return evaluate(oracle_outcomes(predictions));
}

MetricReport rerank_eval(std::span<const PredictionRecord> predictions, const Reranker& reranker) {
  return evaluate(rerank_outcomes(predictions, reranker));
}

ReportRow report_row(std::string name, std::span<const Outcome> rows,
                     const ConsistencySplit& split) {
  std::vector<Outcome> cons, incons;
  for (const auto& r : rows) {
    auto it = split.tags.find(r.query_id);
    if (it == split.tags.end()) {
      fail(Errc::InvalidArgument, "query " + r.query_id + " is missing from the split");
    }
    (it->second == Split::consistent ? cons : incons).push_back(r);
  }
  ReportRow row{std::move(name), std::nullopt, std::nullopt, std::nullopt};
  if (!rows.empty()) row.all = evaluate(rows);
  if (!cons.empty()) row.consistent = evaluate(cons);
  if (!incons.empty()) row.inconsistent = evaluate(incons);
  return row;
}

const ReportRow* Report::find(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

json Report::to_json() const {
  json j{{"format", "ragdx.report"}, {"version", 1}, {"title", title}};
  j["split"] = {{"consistent", consistent},
                {"inconsistent", inconsistent},
                {"inconsistent_proportion",
                 consistent + inconsistent == 0
                     ? 0.0
                     : double(inconsistent) / double(consistent + inconsistent)}};
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row{{"name", r.name}};
    row["all"] = r.all ? json(*r.all) : json(nullptr);
    row["consistent"] = r.consistent ? json(*r.consistent) : json(nullptr);
    row["inconsistent"] = r.inconsistent ? json(*r.inconsistent) : json(nullptr);
    rows_json.push_back(std::move(row));
  }
  j["rows"] = std::move(rows_json);
  return j;
}

std::string Report::to_table() const {
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  auto cell = [](const std::optional<MetricReport>& m, bool f1) {
    char buf[16];
    if (!m) return std::string("     -");
    std::snprintf(buf, sizeof buf, "%6.3f", f1 ? m->macro_f1 : m->acc);
    return std::string(buf);
  };
  std::string out;
  if (!title.empty()) out += title + "\n";
  out += "split sizes: consistent " + std::to_string(consistent) + ", inconsistent " +
         std::to_string(inconsistent) + "\n";
  std::string header = "mode" + std::string(width - 4, ' ');
  header += " | all ACC  all F1 | cons ACC cons F1 | inc ACC  inc F1";
  out += header + "\n" + std::string(header.size(), '-') + "\n";
  for (const auto& r : rows) {
    out += r.name + std::string(width - r.name.size(), ' ');
    out += " | " + cell(r.all, false) + "  " + cell(r.all, true);
    out += " | " + cell(r.consistent, false) + "  " + cell(r.consistent, true);
    out += " | " + cell(r.inconsistent, false) + "  " + cell(r.inconsistent, true) + "\n";
  }
  return out;
}

namespace {

void check_not_above(const ReportRow& oracle, const ReportRow& row) {
  auto check = [&](const std::optional<MetricReport>& o, const std::optional<MetricReport>& m,
                   std::string_view split) {
    if (o && m && m->acc > o->acc) {
      fail(Errc::InvariantViolation, row.name + " ACC " + std::to_string(m->acc) +
                                         " exceeds oracle ACC " + std::to_string(o->acc) +
                                         " on the " + std::string(split) + " split");
    }
  };
  check(oracle.all, row.all, "full");
  check(oracle.consistent, row.consistent, "consistent");
  check(oracle.inconsistent, row.inconsistent, "inconsistent");
}

bool closed_form(std::span<const PredictionRecord> predictions) {
  return std::none_of(predictions.begin(), predictions.end(),
                      [](const auto& p) { return p.task == TaskKind::vqa_open; });
}

}  // namespace

void assert_oracle_dominance(std::span<const PredictionRecord> predictions,
                             std::span<const Reranker* const> rerankers) {
  if (predictions.empty()) return;
  ConsistencySplit split;
  for (const auto& p : predictions) {
    std::set<std::string> distinct(p.candidate_labels.begin(), p.candidate_labels.end());
    split.tags[p.query_id] = distinct.size() >= 2 ? Split::inconsistent : Split::consistent;
  }
  const auto oracle = report_row("oracle", oracle_outcomes(predictions), split);
  check_not_above(oracle, report_row(predictions.front().mode, outcomes(predictions), split));
  const bool has_candidates = std::all_of(predictions.begin(), predictions.end(),
                                          [](const auto& p) { return !p.candidate_labels.empty(); });
  if (!has_candidates) return;
  for (const Reranker* r : rerankers) {
    check_not_above(oracle, report_row(r->name(), rerank_outcomes(predictions, *r), split));
  }
}

Report analyze(const std::vector<NamedDump>& dumps, std::size_t reference,
               std::span<const Reranker* const> rerankers, std::size_t rerank_target) {
  if (reference >= dumps.size() || (!rerankers.empty() && rerank_target >= dumps.size())) {
    fail(Errc::InvalidArgument, "dump index out of range");
  }
  const auto& ref = dumps[reference].second;
  const ConsistencySplit split = split_consistency(ref);
  Report report;
  report.title = "reference split: " + dumps[reference].first;
  report.consistent = split.count(Split::consistent);
  report.inconsistent = split.count(Split::inconsistent);
  for (const auto& [name, preds] : dumps) {
    report.rows.push_back(report_row(name, outcomes(preds), split));
    const bool has_candidates = std::all_of(preds.begin(), preds.end(), [](const auto& p) {
      return !p.candidate_labels.empty();
    });
    if (has_candidates && closed_form(preds)) {
      report.rows.push_back(report_row(name + "/oracle", oracle_outcomes(preds), split));
    }
  }
  for (const Reranker* r : rerankers) {
    const auto& [name, preds] = dumps[rerank_target];
    report.rows.push_back(report_row(name + "/" + r->name(), rerank_outcomes(preds, *r), split));
  }
  return report;
}

Report compare(std::span<const PredictionRecord> before, std::span<const PredictionRecord> after) {
  const ConsistencySplit split = split_consistency(before);
  Report report;
  report.title = "before/after, split from the before dump";
  report.consistent = split.count(Split::consistent);
  report.inconsistent = split.count(Split::inconsistent);
  report.rows.push_back(report_row("before", outcomes(before), split));
  report.rows.push_back(report_row("after", outcomes(after), split));
  if (closed_form(before) && closed_form(after)) {
    report.rows.push_back(report_row("before/oracle", oracle_outcomes(before), split));
    report.rows.push_back(report_row("after/oracle", oracle_outcomes(after), split));
  }
  return report;
}

void write_report(const Report& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& table_path) {
  std::ofstream j(json_path, std::ios::trunc);
  if (!j) fail(Errc::IoError, "cannot open " + json_path.string() + " for writing");
  j << report.to_json().dump(2) << '\n';
  std::ofstream t(table_path, std::ios::trunc);
  if (!t) fail(Errc::IoError, "cannot open " + table_path.string() + " for writing");
  t << report.to_table();
}

}  // namespace ragdx
