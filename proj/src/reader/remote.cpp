// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/reader/remote.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

#include "ragdx/core/distribution.hpp"
#include "ragdx/core/payload.hpp"

namespace ragdx {

void RemoteReaderConfig::validate() const {
  if (endpoint.rfind("http://", 0) != 0) {
    fail(Errc::ConfigInvalid, "reader endpoint must start with http://, got '" + endpoint + "'");
  }
  if (timeout.count() <= 0) fail(Errc::ConfigInvalid, "reader timeout must be positive");
  if (max_in_flight == 0) fail(Errc::ConfigInvalid, "reader max_in_flight must be positive");
  if (retries < 0) fail(Errc::ConfigInvalid, "reader retries must be non-negative");
}

json score_request(const Query& query, const IndexRecord& record, ContextVariant variant) {
  return json{
      {"query_id", query.id},
      {"question", query.question},
      {"query_payload_ref",
       variant == ContextVariant::no_query_image ? std::string() : query.payload_ref},
      {"candidate",
       {{"record_id", raw(record.id)},
        {"payload_ref", record.payload_ref},
        {"caption", payload_param(record.payload_ref, "caption").value_or("")}}},
      {"class_labels", query.vocab.labels()}};
}

std::vector<double> parse_score_response(const std::string& body, std::size_t num_classes) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    fail(Errc::RemoteMalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("log_probs") || !j["log_probs"].is_array()) {
    fail(Errc::RemoteMalformedResponse, "response lacks a log_probs array");
  }
  const auto& arr = j["log_probs"];
  if (arr.size() != num_classes) {
    fail(Errc::RemoteMalformedResponse, "log_probs has " + std::to_string(arr.size()) +
                                            " entries for " + std::to_string(num_classes) +
                                            " class labels");
  }
  std::vector<double> logp;
  logp.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      fail(Errc::RemoteMalformedResponse, "log_probs entries must be finite numbers");
    }
    logp.push_back(v.get<double>());
  }
  // exp then renormalize == softmax over the log-probabilities.
  return softmax(logp);
}

RemoteReader::RemoteReader(RemoteReaderConfig config)
    : config_(std::move(config)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(
          static_cast<std::ptrdiff_t>(config_.max_in_flight))) {
  config_.validate();
}

RemoteReader::~RemoteReader() = default;

bool RemoteReader::healthy() const {
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  auto res = client.Get("/healthz");
  return res && res->status == 200;
}

std::vector<double> RemoteReader::do_score(const Query& query, const IndexRecord* record,
                                           ContextVariant variant) const {
  const std::string body = score_request(query, *record, variant).dump();
  const std::string what = "query " + query.id + ", record " + std::to_string(raw(record->id));

  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{*in_flight_};

  std::string last_error;
  auto backoff = config_.backoff;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post("/score", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      fail(Errc::RemoteMalformedResponse,
           what + ": server rejected the request with HTTP " + std::to_string(res->status));
    }
    try {
      return parse_score_response(res->body, query.vocab.size());
    } catch (const Error& e) {
      fail(e.code(), what + ": " + e.what());
    }
  }
  fail(Errc::RemoteUnavailable, what + ": " + last_error + " after " +
                                    std::to_string(config_.retries + 1) + " attempts");
}

}  // namespace ragdx
