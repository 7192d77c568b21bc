// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/core/payload.hpp"

namespace ragdx {

std::map<std::string, std::string> payload_params(std::string_view payload_ref) {
  std::map<std::string, std::string> out;
  const auto q = payload_ref.find('?');
  if (q == std::string_view::npos) return out;
  std::string_view rest = payload_ref.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    std::string_view item = rest.substr(0, amp);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        out.emplace(std::string(item), std::string());
      } else {
        out.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
      }
    }
    if (amp == std::string_view::npos) break;
    rest.remove_prefix(amp + 1);
  }
  return out;
}

std::optional<std::string> payload_param(std::string_view payload_ref, std::string_view key) {
  auto params = payload_params(payload_ref);
  auto it = params.find(std::string(key));
  if (it == params.end()) return std::nullopt;
  return it->second;
}

std::string_view payload_locator(std::string_view payload_ref) noexcept {
  return payload_ref.substr(0, payload_ref.find('?'));
}

}  // namespace ragdx
