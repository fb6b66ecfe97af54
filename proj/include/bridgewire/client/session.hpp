#pragma once

/// @file session.hpp
/// @brief Host-side client: sessions, imported modules and proxy lifecycle.
///
/// A Session is a cheap handle; copies share one connection. It may move
/// between threads but must not be used from two at once. The exception is
/// interrupt(), which is safe to call from any thread (e.g. a signal
/// watcher) while another thread is blocked in a request.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bridgewire/host_value.hpp"
#include "bridgewire/wire.hpp"

namespace bridgewire::client {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The runtime answered FAIL.
class RemoteError : public Error {
 public:
  RemoteError(std::string message, std::string detail);
  const std::string& message() const { return message_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string message_;
  std::string detail_;
};

/// A proxy minted before the session's last restart.
class StaleReferenceError : public Error {
 public:
  using Error::Error;
};

/// Transport failure, protocol violation, or a dead session.
class SessionError : public Error {
 public:
  using Error::Error;
};

/// The request in flight was cut off by interrupt().
class InterruptedError : public SessionError {
 public:
  using SessionError::SessionError;
};

/// No usable server executable.
class DiscoveryError : public Error {
 public:
  using Error::Error;
};

class SpawnError : public Error {
 public:
  using Error::Error;
};

class NotATableError : public Error {
 public:
  using Error::Error;
};

/// Finds the server executable: `explicit_path`, then $BRIDGEWIRE_SERVER_BIN,
/// then "bridgewire" on $PATH. Throws DiscoveryError naming the rejected path.
std::string discover_server(const std::optional<std::string>& explicit_path = std::nullopt);

struct SpawnOptions {
  std::optional<std::string> server_bin;
  std::string host = "127.0.0.1";
  /// Fixed port; defaults to $BRIDGEWIRE_PORT, else an ephemeral port.
  std::optional<std::uint16_t> port;
  std::chrono::milliseconds timeout{10000};
};

using OutputSink = std::function<void(std::string_view chunk)>;

enum class Direction { Sent, Received };
/// Observes every frame crossing the connection, after encoding or decoding.
using FrameTap = std::function<void(Direction, const Frame&)>;

struct TransferStats {
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
};

class ImportedEnv;

class Session {
 public:
  static Session connect(const std::string& host, std::uint16_t port);
  static Session spawn(SpawnOptions options = {});

  /// Positional and named arguments stay separate on the wire.
  HostValue call(std::string_view name, const HostArgs& positional = {},
                 const HostNamedArgs& named = {});
  HostValue call(const char* name, const HostArgs& positional = {}, const HostNamedArgs& named = {}) {
    return call(std::string_view(name), positional, named);
  }
  HostValue call(const std::string& name, const HostArgs& positional = {},
                 const HostNamedArgs& named = {}) {
    return call(std::string_view(name), positional, named);
  }
  /// Calls a function proxy, a remote function or a type constructor.
  HostValue call(const HostValue& callee, const HostArgs& positional = {},
                 const HostNamedArgs& named = {});

  HostValue eval(std::string_view source);
  /// Evaluates in a fresh scope where `bindings` are local variables.
  HostValue let_eval(std::string_view source, const HostNamedArgs& bindings);

  /// Stores a value server-side without translating it back.
  Proxy put(const HostValue& value);
  /// Deep translation of the referenced object.
  HostValue fetch(const Proxy& proxy);
  HostTable to_table(const Proxy& proxy);

  ImportedEnv import_module(std::string_view path, bool include_unexported = false);

  /// Sends RELEASE for every dropped proxy of the current epoch. Returns the
  /// number sent.
  std::size_t release_flush();
  std::size_t pending_releases() const;

  /// Forcibly ends whatever is running server-side. Spawned sessions restart
  /// on next use; connected sessions need reconnect(). Idempotent.
  void interrupt();
  void reconnect();

  /// Sends BYEBYE and tears the connection down. Further use fails.
  void close();

  std::uint64_t epoch() const;
  bool spawned() const;
  bool alive() const;

  void set_output_sinks(OutputSink out, OutputSink err);
  void set_frame_tap(FrameTap tap);
  TransferStats stats() const;

  struct State;

 private:
  explicit Session(std::shared_ptr<State> state) : state_(std::move(state)) {}
  std::shared_ptr<State> state_;
};

/// Spawns a server and runs a trivial call; true when it all works.
bool setup_ok(const std::optional<std::string>& server_bin = std::nullopt);

/// A remote function bound to a session.
class RemoteCallable {
 public:
  RemoteCallable(Session session, RemoteFunction fn) : session_(std::move(session)), fn_(std::move(fn)) {}
  HostValue operator()(const HostArgs& positional = {}, const HostNamedArgs& named = {}) const {
    return session_.call(HostValue(fn_), positional, named);
  }
  /// Value form, for passing the function (or type) as an argument.
  const RemoteFunction& function() const { return fn_; }
  bool is_type() const { return fn_.kind == FnKind::TypeConstructor; }

 private:
  mutable Session session_;
  RemoteFunction fn_;
};

/// The callables of one remote module, reachable by name and by ASCII alias.
class ImportedEnv {
 public:
  struct Symbol {
    std::string name;
    std::string kind;  // "function", "type" or "value"
    std::string alias;
  };

  ImportedEnv(Session session, std::string module, std::vector<Symbol> symbols);

  const std::string& module() const { return module_; }
  const std::vector<Symbol>& symbols() const { return symbols_; }
  bool contains(std::string_view name) const;
  /// Throws std::out_of_range for unknown names.
  RemoteCallable operator[](std::string_view name) const;
  HostValue call(std::string_view name, const HostArgs& positional = {},
                 const HostNamedArgs& named = {}) const {
    return (*this)[name](positional, named);
  }

 private:
  Session session_;
  std::string module_;
  std::vector<Symbol> symbols_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace bridgewire::client
