// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/analysis/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace ragdx {

namespace {

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

double f1_of(double p, double r) { return safe_div(2 * p * r, p + r); }

std::string normalize_answer(std::string_view s) {
  std::string out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) {
    if (!out.empty()) out += ' ';
    for (char c : tok) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(Errc::LengthMismatch, std::to_string(a) + " predictions but " + std::to_string(b) +
                                   " gold labels");
  }
}

}  // namespace

std::set<std::string> token_set(std::string_view text) {
  std::set<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.insert(tok);
  }
  return out;
}

TokenScores token_scores(std::string_view predicted, std::string_view gold) {
  const auto p = token_set(predicted);
  const auto g = token_set(gold);
  std::size_t common = 0;
  for (const auto& t : p) common += g.count(t);
  TokenScores s;
  s.precision = safe_div(double(common), double(p.size()));
  s.recall = safe_div(double(common), double(g.size()));
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

namespace {

std::vector<ClassStats> class_stats(std::span<const std::string> predicted,
                                    std::span<const std::string> gold) {
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) {
      ++counts[gold[i]].tp;
    } else {
      ++counts[predicted[i]].fp;
      ++counts[gold[i]].fn;
    }
  }
  std::vector<ClassStats> out;
  for (const auto& [label, c] : counts) {
    ClassStats s;
    s.label = label;
    s.precision = safe_div(double(c.tp), double(c.tp + c.fp));
    s.recall = safe_div(double(c.tp), double(c.tp + c.fn));
    s.f1 = f1_of(s.precision, s.recall);
    s.support = c.tp + c.fn;
    out.push_back(s);
  }
  return out;
}

}  // namespace

double macro_f1(std::span<const std::string> predicted, std::span<const std::string> gold) {
  check_aligned(predicted.size(), gold.size());
  const auto stats = class_stats(predicted, gold);
  if (stats.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : stats) sum += s.f1;
  return sum / double(stats.size());
}

MetricReport metrics(std::span<const std::string> predicted, std::span<const std::string> gold,
                     TaskKind task) {
  check_aligned(predicted.size(), gold.size());
  if (gold.empty()) fail(Errc::EmptyEvalSet, "no predictions to evaluate");
  MetricReport m;
  m.count = gold.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += predicted[i] == gold[i];
  m.acc = double(correct) / double(m.count);
  m.per_class = class_stats(predicted, gold);
  double sum = 0.0;
  for (const auto& s : m.per_class) sum += s.f1;
  m.macro_f1 = sum / double(m.per_class.size());

  if (task == TaskKind::vqa_closed) {
    std::size_t em = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      em += normalize_answer(predicted[i]) == normalize_answer(gold[i]);
    }
    m.exact_match = double(em) / double(m.count);
  } else if (task == TaskKind::vqa_open) {
    TokenScores avg;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const auto s = token_scores(predicted[i], gold[i]);
      avg.precision += s.precision;
      avg.recall += s.recall;
      avg.f1 += s.f1;
    }
    avg.precision /= double(m.count);
    avg.recall /= double(m.count);
    avg.f1 /= double(m.count);
    m.tokens = avg;
  }
  return m;
}

double multilabel_macro_f1(std::span<const std::vector<bool>> predicted,
                           std::span<const std::vector<bool>> gold) {
  check_aligned(predicted.size(), gold.size());
  if (gold.empty()) fail(Errc::EmptyEvalSet, "no predictions to evaluate");
  const std::size_t labels = gold.front().size();
  double sum = 0.0;
  for (std::size_t l = 0; l < labels; ++l) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (predicted[i].size() != labels || gold[i].size() != labels) {
        fail(Errc::LengthMismatch, "multi-label rows differ in width");
      }
      tp += predicted[i][l] && gold[i][l];
      fp += predicted[i][l] && !gold[i][l];
      fn += !predicted[i][l] && gold[i][l];
    }
    sum += f1_of(safe_div(double(tp), double(tp + fp)), safe_div(double(tp), double(tp + fn)));
  }
  return labels == 0 ? 0.0 : sum / double(labels);
}

void to_json(json& j, const MetricReport& m) {
  j = json{{"n", m.count}, {"acc", m.acc}, {"macro_f1", m.macro_f1}};
  json per = json::array();
  for (const auto& s : m.per_class) {
    per.push_back({{"label", s.label}, {"precision", s.precision}, {"recall", s.recall},
                   {"f1", s.f1}, {"support", s.support}});
  }
  j["per_class"] = per;
  if (m.exact_match) j["exact_match"] = *m.exact_match;
  if (m.tokens) {
    j["token_precision"] = m.tokens->precision;
    j["token_recall"] = m.tokens->recall;
    j["token_f1"] = m.tokens->f1;
  }
}

}  // namespace ragdx
