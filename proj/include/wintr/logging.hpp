// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace wintr::logging {

/// Reads WINTR_LOG_LEVEL (trace|debug|info|warn|error|off); default "info".
void init_from_env();

void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);
void error(std::string_view message);

}  // namespace wintr::logging
