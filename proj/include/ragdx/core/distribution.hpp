// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ragdx {

/// Tolerance for the sum-to-one invariant on stored probability vectors.
inline constexpr double kProbTolerance = 1e-6;

/// Floor applied before taking logs of probabilities.
inline constexpr double kLogFloor = 1e-12;

/// Rescales non-negative weights to sum to one.
/// Throws NonFinite on NaN/Inf or negative entries, AllZero when nothing is positive.
std::vector<double> normalize_distribution(std::span<const double> weights);

/// softmax(logits / temperature), computed with max subtraction.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

double log_sum_exp(std::span<const double> values);

bool is_distribution(std::span<const double> p, double tolerance = kProbTolerance);

/// First index of the maximum; lowest index wins ties.
std::size_t argmax(std::span<const double> values);

}  // namespace ragdx
