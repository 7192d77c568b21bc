// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "ragdx/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ragdx::run_cli(args, std::cout, std::cerr);
}
