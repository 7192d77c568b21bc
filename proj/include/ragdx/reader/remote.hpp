// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "ragdx/core/json.hpp"
#include "ragdx/reader/reader.hpp"

namespace ragdx {

/// Environment variable that overrides the configured reader endpoint.
inline constexpr const char* kReaderEndpointEnv = "RAGDX_READER_ENDPOINT";

struct RemoteReaderConfig {
  std::string endpoint;  // "http://host:port"
  std::chrono::milliseconds timeout{5000};
  std::size_t max_in_flight = 4;
  int retries = 2;
  std::chrono::milliseconds backoff{50};

  void validate() const;
};

/// Request body sent to POST /score for one (query, candidate) pair.
/// An empty query_payload_ref means the query image is withheld.
json score_request(const Query& query, const IndexRecord& record, ContextVariant variant);

/// Parses {"log_probs": [...]} aligned to `num_classes` labels and returns
/// the renormalized probabilities. Throws RemoteMalformedResponse.
std::vector<double> parse_score_response(const std::string& body, std::size_t num_classes);

/// HTTP client for a reader server. Transport failures and 5xx responses are
/// retried `retries` times with exponential backoff before RemoteUnavailable.
class RemoteReader final : public Reader {
 public:
  explicit RemoteReader(RemoteReaderConfig config);
  ~RemoteReader() override;

  std::string identity() const override { return "remote:" + config_.endpoint; }
  bool supports(ContextVariant variant) const override {
    return variant != ContextVariant::no_retrieval;
  }
  /// GET /healthz == 200.
  bool healthy() const;

 protected:
  std::vector<double> do_score(const Query& query, const IndexRecord* record,
                               ContextVariant variant) const override;

 private:
  RemoteReaderConfig config_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace ragdx
