#pragma once

/// @file log.hpp
/// @brief Diagnostics on stderr, gated by BRIDGEWIRE_LOG (off|info|debug).

#include <fmt/format.h>

#include <optional>
#include <string_view>

namespace bridgewire {

enum class LogLevel { Off = 0, Info = 1, Debug = 2 };

std::optional<LogLevel> parse_log_level(std::string_view s);
/// Current level; read from the environment on first use.
LogLevel log_level();
void set_log_level(LogLevel level);
void log_write(LogLevel level, std::string_view message);

template <class... Args>
void log_info(fmt::format_string<Args...> f, Args&&... args) {
  if (log_level() >= LogLevel::Info) log_write(LogLevel::Info, fmt::format(f, std::forward<Args>(args)...));
}

template <class... Args>
void log_debug(fmt::format_string<Args...> f, Args&&... args) {
  if (log_level() >= LogLevel::Debug) log_write(LogLevel::Debug, fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace bridgewire
