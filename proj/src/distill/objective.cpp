// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/distill/objective.hpp"

#include <cmath>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/error.hpp"

namespace ragdx {

std::vector<double> reader_posterior(std::span<const double> gold_probs) {
  if (gold_probs.empty()) fail(Errc::InvalidArgument, "reader_posterior: no candidates");
  bool any_positive = false;
  std::vector<double> logs(gold_probs.size());
  for (std::size_t k = 0; k < gold_probs.size(); ++k) {
    const double g = gold_probs[k];
    if (!std::isfinite(g) || g < 0.0 || g > 1.0 + kProbTolerance) {
      fail(Errc::NonFinite, "reader_posterior: gold probability outside [0, 1]");
    }
    any_positive = any_positive || g > 0.0;
    logs[k] = std::log(std::max(g, kLogFloor));
  }
  if (!any_positive) fail(Errc::AllZero, "reader_posterior: every candidate gives the gold answer zero probability");
  const double lse = log_sum_exp(logs);
  for (double& l : logs) l = std::exp(l - lse);
  return logs;
}

std::vector<double> retriever_distribution(std::span<const double> scores, double temperature) {
  return softmax(scores, temperature);
}

double kl_loss(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(Errc::LengthMismatch, "kl_loss: " + std::to_string(p.size()) + " vs " +
                                   std::to_string(q.size()) + " entries");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) acc += p[k] * (std::log(p[k]) - std::log(std::max(q[k], kLogFloor)));
  }
  return acc;
}

HeadGradient loss_gradient(std::span<const double> p, std::span<const double> q,
                           double temperature, const Eigen::VectorXd& query,
                           std::span<const Eigen::VectorXd> candidate_embs) {
  if (p.size() != q.size() || p.size() != candidate_embs.size()) {
    fail(Errc::LengthMismatch, "loss_gradient: p, q and candidates differ in length");
  }
  const auto d = query.size();
  HeadGradient g{Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d),
                 std::vector<double>(p.size())};
  double total = 0.0;
  Eigen::VectorXd weighted_emb = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (candidate_embs[k].size() != d) {
      fail(Errc::DimensionMismatch, "loss_gradient: candidate dimension differs from query");
    }
    g.scores[k] = (q[k] - p[k]) / temperature;
    total += g.scores[k];
    weighted_emb += g.scores[k] * candidate_embs[k];
  }
  g.weight = query * weighted_emb.transpose();
  g.bias = total * query;
  return g;
}

QueryObjective evaluate_query(const Eigen::VectorXd& query,
                              std::span<const Eigen::VectorXd> candidate_embs,
                              std::span<const double> gold_probs, const ProjectionHead& proj,
                              double temperature) {
  if (gold_probs.size() != candidate_embs.size()) {
    fail(Errc::LengthMismatch, "evaluate_query: gold_probs and candidates differ in length");
  }
  QueryObjective out;
  out.scores.reserve(candidate_embs.size());
  for (const auto& e : candidate_embs) out.scores.push_back(query.dot(proj.weight * e + proj.bias));
  out.posterior = reader_posterior(gold_probs);
  out.retriever = retriever_distribution(out.scores, temperature);
  // Exact log-softmax rather than kl_loss: its probability floor would make the loss
  // disagree with the gradient once a candidate falls far behind.
  std::vector<double> logits(out.scores.size());
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] = out.scores[k] / temperature;
  const double lse = log_sum_exp(logits);
  out.loss = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double p = out.posterior[k];
    if (p > 0.0) out.loss += p * (std::log(p) - (logits[k] - lse));
  }
  out.gradient = loss_gradient(out.posterior, out.retriever, temperature, query, candidate_embs);
  return out;
}

}  // namespace ragdx
