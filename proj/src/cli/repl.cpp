#include <unistd.h>

#include <istream>
#include <ostream>
#include <thread>

#include "bridgewire/cli/commands.hpp"
#include "bridgewire/client/session.hpp"

namespace bridgewire::cli {

namespace {

client::Session open_session(const CliConfig& config) {
  if (auto port = effective_port(config); port && !config.server_bin) return client::Session::connect(config.host, *port);
  client::SpawnOptions opts;
  opts.host = config.host;
  opts.port = config.port;
  try {
    opts.server_bin = client::discover_server(config.server_bin);
  } catch (const client::DiscoveryError&) {
    if (config.server_bin) throw;
    // This executable is a server too.
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
    if (n <= 0) throw;
    opts.server_bin = std::string(buf, static_cast<std::size_t>(n));
  }
  return client::Session::spawn(opts);
}

}  // namespace

int cmd_repl(const CliConfig& config, std::istream& in, std::ostream& out, std::ostream& err,
             std::atomic<bool>* interrupt_flag) {
  std::optional<client::Session> session;
  try {
    session = open_session(config);
  } catch (const std::exception& e) {
    err << "repl: " << e.what() << '\n';
    return kExitFailure;
  }
  session->set_output_sinks([&out](std::string_view s) { out << s << std::flush; },
                            [&err](std::string_view s) { err << s << std::flush; });

  std::atomic<bool> busy{false};
  std::atomic<bool> stop{false};
  std::thread watcher;
  if (interrupt_flag) {
    // interrupt() is the one Session member safe to call from another thread.
    client::Session handle = *session;
    watcher = std::thread([&, handle]() mutable {
      while (!stop.load()) {
        if (interrupt_flag->exchange(false) && busy.load()) handle.interrupt();
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    });
  }

  int code = kExitOk;
  std::string line;
  while (true) {
    out << "bw> " << std::flush;
    if (!std::getline(in, line)) {
      out << '\n';
      break;
    }
    if (line == ":quit") break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    busy.store(true);
    try {
      const auto v = session->eval(line);
      busy.store(false);
      out << format_host(v) << '\n';
    } catch (const client::RemoteError& e) {
      busy.store(false);
      err << "error: " << e.message() << '\n';
      if (!e.detail().empty()) err << e.detail() << '\n';
    } catch (const client::InterruptedError&) {
      busy.store(false);
      err << "interrupted\n";
      try {
        if (!session->spawned()) session->reconnect();
      } catch (const std::exception& e) {
        err << "repl: reconnect failed: " << e.what() << '\n';
        code = kExitFailure;
        break;
      }
    } catch (const client::SessionError& e) {
      busy.store(false);
      err << "repl: connection lost: " << e.what() << '\n';
      code = kExitFailure;
      break;
    } catch (const std::exception& e) {
      busy.store(false);
      err << "error: " << e.what() << '\n';
    }
    if (interrupt_flag) interrupt_flag->store(false);
  }
  stop.store(true);
  if (watcher.joinable()) watcher.join();
  try {
    session->close();
  } catch (const std::exception&) {
  }
  return code;
}

}  // namespace bridgewire::cli
