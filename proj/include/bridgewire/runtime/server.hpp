#pragma once

/// @file server.hpp
/// @brief Object registry, per-connection session loop and the TCP server.

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "bridgewire/io.hpp"
#include "bridgewire/runtime/interpreter.hpp"
#include "bridgewire/wire.hpp"

namespace bridgewire::rt {

/// Objects handed to the client by reference. Ids are even and never reused
/// within a session; returning the same object again bumps its refcount.
class ObjectRegistry {
 public:
  Ref add(const ObjectPtr& obj);
  /// Throws EvalError for unknown or released ids.
  ObjectPtr get(std::uint64_t id) const;
  /// Drops one reference; returns false for unknown ids.
  bool release(std::uint64_t id);
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    ObjectPtr object;
    std::uint64_t refcount;
  };
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::unordered_map<const Object*, std::uint64_t> by_object_;
  std::uint64_t counter_ = 0;
};

/// Rebuilds a runtime object from a wire value. I32 arrays widen to I64,
/// structs of known types go through their constructor, refs resolve
/// against the registry and callback FnRefs become callable objects.
ObjectPtr reconstruct(const Value& v, const ModuleTable& modules, const ObjectRegistry& registry);

/// Runs the request loop on a connection whose handshake is done. Returns
/// when the client says BYEBYE or disconnects.
void serve_session(SocketStream& stream, const ModuleTable& modules);

/// Handshake, then serve_session. Protocol errors are logged, not thrown.
void serve_connection(int fd, const ModuleTable& modules);

/// Accepts connections, one thread each, until stopped.
class Server {
 public:
  explicit Server(std::shared_ptr<const ModuleTable> modules);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and listens; returns the bound port.
  std::uint16_t listen(const std::string& host, std::uint16_t port);
  /// Blocks accepting connections. With `once`, serves a single connection
  /// and returns when it ends.
  void run(bool once = false);
  /// Runs the accept loop on a background thread.
  void start();
  /// Stops accepting and disconnects every live session.
  void stop();

  std::uint16_t port() const { return port_; }

 private:
  void handle(int fd);
  void reap_locked();

  struct SessionThread {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  std::shared_ptr<const ModuleTable> modules_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::list<SessionThread> sessions_;
  std::unordered_set<int> live_fds_;
};

/// `serve` entry point: prints "BRIDGEWIRE LISTENING <port>" on `announce`
/// once ready. Returns a process exit code.
int run_server(const std::string& host, std::uint16_t port, bool once, std::ostream& announce);

}  // namespace bridgewire::rt
