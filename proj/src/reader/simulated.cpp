// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/reader/simulated.hpp"

#include <cmath>
#include <cstdio>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/payload.hpp"
#include "ragdx/core/rng.hpp"

namespace ragdx {

void SimulatedReaderParams::validate(std::size_t num_classes) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(Errc::ConfigInvalid, "reader alpha must be in [0, 1]");
  if (!(unrelated_weight >= 0.0 && unrelated_weight <= 1.0)) {
    fail(Errc::ConfigInvalid, "reader unrelated_weight must be in [0, 1]");
  }
  if (!(query_noise >= 0.0) || !(pair_noise >= 0.0) || !std::isfinite(query_noise) ||
      !std::isfinite(pair_noise)) {
    fail(Errc::ConfigInvalid, "reader noise scales must be finite and non-negative");
  }
  if (confusion.empty()) return;
  if (confusion.size() != num_classes) {
    fail(Errc::ConfigInvalid, "confusion matrix has " + std::to_string(confusion.size()) +
                                  " rows for " + std::to_string(num_classes) + " classes");
  }
  for (const auto& row : confusion) {
    if (row.size() != num_classes || !is_distribution(row)) {
      fail(Errc::ConfigInvalid, "confusion matrix rows must be probability vectors");
    }
  }
}

std::vector<std::vector<double>> SimulatedReaderParams::diagonal_confusion(std::size_t num_classes,
                                                                           double diagonal) {
  const double off = num_classes > 1 ? (1.0 - diagonal) / double(num_classes - 1) : 0.0;
  std::vector<std::vector<double>> m(num_classes, std::vector<double>(num_classes, off));
  for (std::size_t i = 0; i < num_classes; ++i) m[i][i] = num_classes > 1 ? diagonal : 1.0;
  return m;
}

void to_json(json& j, const SimulatedReaderParams& p) {
  j = json{{"alpha", p.alpha},
           {"confusion", p.confusion},
           {"seed", p.seed},
           {"query_noise", p.query_noise},
           {"pair_noise", p.pair_noise},
           {"unrelated_weight", p.unrelated_weight}};
}

void from_json(const json& j, SimulatedReaderParams& p) {
  p.alpha = j.at("alpha").get<double>();
  p.confusion = j.value("confusion", std::vector<std::vector<double>>{});
  p.seed = j.value("seed", std::uint64_t{0});
  p.query_noise = j.value("query_noise", 0.0);
  p.pair_noise = j.value("pair_noise", 0.0);
  p.unrelated_weight = j.value("unrelated_weight", 0.1);
}

SimulatedReader::SimulatedReader(SimulatedReaderParams params, std::size_t num_classes)
    : params_(std::move(params)), num_classes_(num_classes) {
  params_.validate(num_classes_);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(json(params_).dump())));
  identity_ = std::string("simulated:") + buf;
}

namespace {

std::size_t label_index(const ClassVocab& vocab, const std::string& label, const std::string& what) {
  auto idx = vocab.index_of(label);
  if (!idx) fail(Errc::InvalidArgument, what + " label '" + label + "' is not in the vocabulary");
  return *idx;
}

}  // namespace

std::vector<double> SimulatedReader::do_score(const Query& query, const IndexRecord* record,
                                              ContextVariant variant) const {
  const ClassVocab& vocab = query.vocab;
  if (vocab.size() != num_classes_) {
    fail(Errc::VocabMismatch, "simulated reader configured for " + std::to_string(num_classes_) +
                                  " classes, query " + query.id + " has " +
                                  std::to_string(vocab.size()));
  }
  const std::size_t n = vocab.size();
  const std::string query_label =
      payload_param(query.payload_ref, "label").value_or(query.gold_answer);
  const std::size_t gold = label_index(vocab, query_label, "query");
  const std::string query_cluster =
      payload_param(query.payload_ref, "cluster").value_or(query_label);

  std::vector<double> prior(n, 1.0 / double(n));
  if (variant != ContextVariant::no_query_image) {
    SplitMix64 rng(derive_seed(params_.seed, fnv1a64("prior:" + query.id)));
    for (std::size_t j = 0; j < n; ++j) {
      const double base = params_.confusion.empty() ? 1.0 / double(n) : params_.confusion[gold][j];
      prior[j] = base * std::exp(params_.query_noise * rng.normal());
    }
    prior = normalize_distribution(prior);
  }
  if (record == nullptr) return prior;

  const auto record_label = payload_param(record->payload_ref, "label");
  if (!record_label) {
    fail(Errc::InvalidArgument,
         "record " + std::to_string(raw(record->id)) + " carries no label metadata");
  }
  const std::size_t label = label_index(vocab, *record_label, "record");
  const std::string record_cluster =
      payload_param(record->payload_ref, "cluster").value_or(*record_label);
  const bool related =
      variant == ContextVariant::no_query_image || record_cluster == query_cluster;
  const double trust = related ? params_.alpha : params_.alpha * params_.unrelated_weight;

  std::vector<double> mix(n);
  SplitMix64 rng(derive_seed(params_.seed, fnv1a64("pair:" + query.id), raw(record->id)));
  for (std::size_t j = 0; j < n; ++j) {
    mix[j] = (1.0 - trust) * prior[j] + (j == label ? trust : 0.0);
    mix[j] *= std::exp(params_.pair_noise * rng.normal());
  }
  return normalize_distribution(mix);
}

}  // namespace ragdx
