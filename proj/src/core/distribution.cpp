// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/core/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ragdx/core/error.hpp"

namespace ragdx {

std::vector<double> normalize_distribution(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      fail(Errc::NonFinite, "normalize_distribution: weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) fail(Errc::AllZero, "normalize_distribution: all weights are zero");
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= sum;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(Errc::InvalidArgument, "softmax: temperature must be positive");
  }
  if (logits.empty()) fail(Errc::InvalidArgument, "softmax: empty input");
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) fail(Errc::NonFinite, "softmax: non-finite score");
    scaled[i] = logits[i] / temperature;
  }
  const double m = *std::max_element(scaled.begin(), scaled.end());
  double sum = 0.0;
  for (double& s : scaled) {
    s = std::exp(s - m);
    sum += s;
  }
  for (double& s : scaled) s /= sum;
  return scaled;
}

bool is_distribution(std::span<const double> p, double tolerance) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) fail(Errc::InvalidArgument, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace ragdx
