// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragdx/core/json.hpp"
#include "ragdx/reader/reader.hpp"

namespace ragdx {

/// Parameters of the synthetic reader.
///
/// For a query with gold class g the reader first forms a query-only belief
///   prior_j ∝ confusion[g][j] · exp(query_noise · z_j)
/// (uniform when the query image is withheld). A retrieved record with label
/// l pulls the belief toward l:
///   mix = (1 − t) · prior + t · onehot(l)
/// where t = alpha when the record shares the query's visual cluster (or the
/// query image is withheld), and t = alpha · unrelated_weight otherwise.
/// Finally every entry is multiplied by exp(pair_noise · z'_j) and the vector
/// renormalized. z and z' are standard normals drawn from streams keyed by
/// (seed, query id) and (seed, query id, record id); see rng.hpp.
///
/// Labels and clusters are read from payload metadata (`label=`, `cluster=`);
/// a record without a cluster is assumed to sit in its label's cluster, and a
/// query's cluster defaults to its gold answer.
struct SimulatedReaderParams {
  double alpha = 0.95;
  /// Row-stochastic, indexed in vocabulary order. Empty means uniform.
  std::vector<std::vector<double>> confusion;
  std::uint64_t seed = 0;
  double query_noise = 0.0;
  double pair_noise = 0.0;
  double unrelated_weight = 0.1;

  /// Throws ConfigInvalid.
  void validate(std::size_t num_classes) const;

  /// confusion with `diagonal` on the diagonal and the rest spread evenly.
  static std::vector<std::vector<double>> diagonal_confusion(std::size_t num_classes,
                                                             double diagonal);
};

void to_json(json& j, const SimulatedReaderParams& p);
void from_json(const json& j, SimulatedReaderParams& p);

class SimulatedReader final : public Reader {
 public:
  SimulatedReader(SimulatedReaderParams params, std::size_t num_classes);

  std::string identity() const override { return identity_; }
  const SimulatedReaderParams& params() const noexcept { return params_; }

 protected:
  std::vector<double> do_score(const Query& query, const IndexRecord* record,
                               ContextVariant variant) const override;

 private:
  SimulatedReaderParams params_;
  std::size_t num_classes_;
  std::string identity_;
};

}  // namespace ragdx
