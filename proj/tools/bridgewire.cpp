// bridgewire: serve | repl | bench | selftest

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/log.hpp"

namespace {

std::atomic<bool> g_interrupt{false};

extern "C" void on_sigint(int) { g_interrupt.store(true); }

void install_sigint() {
  struct sigaction sa {};
  sa.sa_handler = on_sigint;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = SA_RESTART;  // the prompt's blocking read must survive Ctrl-C
  sigaction(SIGINT, &sa, nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bridgewire;
  cli::CliConfig config;
  std::optional<std::string> log_level;

  CLI::App app{"bridgewire: binary RPC bridge to an embedded evaluation runtime"};
  app.require_subcommand(1);
  app.add_option("--log", log_level, "Log level: off, info or debug")
      ->check(CLI::IsMember({"off", "info", "debug"}));

  auto add_endpoint = [&](CLI::App* sub) {
    sub->add_option("--host", config.host, "Host to bind or connect to")->capture_default_str();
    sub->add_option("--port", config.port, "TCP port (0 for ephemeral)")->check(CLI::Range(0, 65535));
  };

  auto* serve = app.add_subcommand("serve", "Run the runtime server");
  add_endpoint(serve);

  auto* repl = app.add_subcommand("repl", "Evaluate expressions interactively");
  add_endpoint(repl);
  repl->add_option("--server-bin", config.server_bin, "Server executable to spawn");

  auto* bench = app.add_subcommand("bench", "Time binary codec against the text baseline");
  bench->add_option("--size", config.bench_size, "Elements in the float array")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--runs", config.bench_runs, "Runs per format; the median is reported")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  std::string format = "both";
  bench->add_option("--format", format, "binary, json-baseline or both")
      ->check(CLI::IsMember({"binary", "json-baseline", "both"}))
      ->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "Golden vectors, round trips and a spawn scenario");
  selftest->add_option("--server-bin", config.server_bin, "Server executable for the spawn scenario");
  selftest->add_option("--golden-dir", config.golden_dir, "Directory of golden .hex files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (log_level) set_log_level(*parse_log_level(*log_level));
  if (format == "binary") config.bench_format = cli::BenchFormat::Binary;
  if (format == "json-baseline") config.bench_format = cli::BenchFormat::JsonBaseline;

  if (*serve) return cli::cmd_serve(config, std::cout, std::cerr);
  if (*repl) {
    install_sigint();
    return cli::cmd_repl(config, std::cin, std::cout, std::cerr, &g_interrupt);
  }
  if (*bench) return cli::cmd_bench(config, std::cout, std::cerr);
  return cli::cmd_selftest(config, std::cout, std::cerr);
}
