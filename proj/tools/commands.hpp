// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lsat::cli {

// Parses argv-style arguments (without the program name) and runs the chosen
// subcommand. Returns the process exit code; errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsat::cli
