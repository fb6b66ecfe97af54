#include "bridgewire/log.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace bridgewire {

namespace {

constexpr int kUnset = -1;
std::atomic<int> g_level{kUnset};
std::mutex g_write_mu;

}  // namespace

std::optional<LogLevel> parse_log_level(std::string_view s) {
  if (s == "off") return LogLevel::Off;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  return std::nullopt;
}

LogLevel log_level() {
  int v = g_level.load(std::memory_order_relaxed);
  if (v == kUnset) {
    const char* env = std::getenv("BRIDGEWIRE_LOG");
    auto parsed = env ? parse_log_level(env) : std::nullopt;
    v = static_cast<int>(parsed.value_or(LogLevel::Off));
    int expected = kUnset;
    if (!g_level.compare_exchange_strong(expected, v)) v = expected;
  }
  return static_cast<LogLevel>(v);
}

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

void log_write(LogLevel level, std::string_view message) {
  std::lock_guard lock(g_write_mu);
  std::fprintf(stderr, "[bridgewire %s %d] %.*s\n", level == LogLevel::Debug ? "debug" : "info",
               static_cast<int>(::getpid()), static_cast<int>(message.size()), message.data());
}

}  // namespace bridgewire
