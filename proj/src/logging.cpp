// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace wintr::logging {

namespace {

spdlog::logger& logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("wintr");
    l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    return l;
  }();
  return *instance;
}

}  // namespace

void init_from_env() {
  const char* level = std::getenv("WINTR_LOG_LEVEL");
  logger().set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

void debug(std::string_view message) { logger().debug("{}", message); }
void info(std::string_view message) { logger().info("{}", message); }
void warn(std::string_view message) { logger().warn("{}", message); }
void error(std::string_view message) { logger().error("{}", message); }

}  // namespace wintr::logging
