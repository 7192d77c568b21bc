// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace ragdx {

/// Payload references are opaque locators that may carry metadata as a
/// query string: "synth:record/17?label=c1&cluster=c1". Returns the
/// key/value pairs after '?', split on '&'. Keys without '=' map to "".
std::map<std::string, std::string> payload_params(std::string_view payload_ref);

std::optional<std::string> payload_param(std::string_view payload_ref, std::string_view key);

/// Locator part before '?'.
std::string_view payload_locator(std::string_view payload_ref) noexcept;

}  // namespace ragdx
