#include <cstdlib>
#include <ostream>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/runtime/server.hpp"

namespace bridgewire::cli {

std::optional<std::uint16_t> effective_port(const CliConfig& config) {
  if (config.port) return config.port;
  const char* env = std::getenv("BRIDGEWIRE_PORT");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const long p = std::strtol(env, &end, 10);
  if (*end != '\0' || p < 0 || p > 65535) return std::nullopt;
  return static_cast<std::uint16_t>(p);
}

int cmd_serve(const CliConfig& config, std::ostream& out, std::ostream& err) {
  try {
    return rt::run_server(config.host, effective_port(config).value_or(0), false, out);
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace bridgewire::cli
