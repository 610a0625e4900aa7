// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string_view>

namespace lsat {

using WarningSink = std::function<void(std::string_view)>;

// Routes a non-fatal diagnostic to the installed sink (stderr by default).
void warn(std::string_view message);

// Installs a new sink and returns the previous one. Passing an empty function
// restores the stderr sink.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace lsat
