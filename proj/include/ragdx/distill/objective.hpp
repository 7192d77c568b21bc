// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ragdx/index/index.hpp"

namespace ragdx {

/// Normalized reader posterior over K candidates from the probability the
/// reader gives the gold answer with each candidate prepended:
///   p_k = exp(log g_k) / sum_i exp(log g_i), with g floored at 1e-12.
/// Throws AllZero when every g_k is zero, NonFinite for entries outside [0, 1].
std::vector<double> reader_posterior(std::span<const double> gold_probs);

/// softmax(scores / temperature) over the retrieved set.
std::vector<double> retriever_distribution(std::span<const double> scores, double temperature);

/// KL(p || q) = sum_k p_k log(p_k / q_k), q floored at 1e-12, 0 log 0 = 0.
double kl_loss(std::span<const double> p, std::span<const double> q);

struct HeadGradient {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  /// dL/ds_k = (q_k - p_k) / temperature
  std::vector<double> scores;

  double norm() const { return std::sqrt(weight.squaredNorm() + bias.squaredNorm()); }
};

/// Gradient of KL(p || softmax(s / temperature)) with p held fixed, where
/// s_k = query . (W e_k + b):
///   dL/dW = sum_k dL/ds_k * query e_k^T,   dL/db = sum_k dL/ds_k * query.
HeadGradient loss_gradient(std::span<const double> p, std::span<const double> q,
                           double temperature, const Eigen::VectorXd& query,
                           std::span<const Eigen::VectorXd> candidate_embs);

struct QueryObjective {
  std::vector<double> scores;
  std::vector<double> posterior;  // p
  std::vector<double> retriever;  // q
  double loss = 0.0;
  HeadGradient gradient;
};

/// Forward and backward pass for one query's candidate set.
QueryObjective evaluate_query(const Eigen::VectorXd& query,
                              std::span<const Eigen::VectorXd> candidate_embs,
                              std::span<const double> gold_probs, const ProjectionHead& proj,
                              double temperature);

}  // namespace ragdx
