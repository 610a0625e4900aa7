// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lsat::cli::run(args, std::cout, std::cerr);
}
