// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ragdx/core/error.hpp"

namespace ragdx {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitArtifact = 3;
inline constexpr int kExitReader = 4;
inline constexpr int kExitInternal = 5;

int exit_code(Errc code) noexcept;

/// Runs one command line (without the program name). Results go to `out`,
/// notices and machine-readable errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ragdx
