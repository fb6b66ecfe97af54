#include "bridgewire/client/session.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "bridgewire/io.hpp"
#include "bridgewire/log.hpp"
#include "bridgewire/translate.hpp"

namespace bridgewire::client {

RemoteError::RemoteError(std::string message, std::string detail)
    : Error(detail.empty() ? message : message + "\n" + detail),
      message_(std::move(message)),
      detail_(std::move(detail)) {}

// --- discovery and spawning -----------------------------------------------------

namespace {

bool is_executable_file(const std::string& path) {
  struct stat st{};
  return ::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(path.c_str(), X_OK) == 0;
}

std::string checked(const std::string& path, std::string_view source) {
  struct stat st{};
  if (::stat(path.c_str(), &st) != 0)
    throw DiscoveryError(fmt::format("{} '{}' does not exist", source, path));
  if (!is_executable_file(path))
    throw DiscoveryError(fmt::format("{} '{}' is not an executable file", source, path));
  return path;
}

std::optional<std::uint16_t> env_port() {
  const char* v = std::getenv("BRIDGEWIRE_PORT");
  if (!v || !*v) return std::nullopt;
  unsigned port = 0;
  auto [p, ec] = std::from_chars(v, v + std::strlen(v), port);
  if (ec != std::errc{} || *p != '\0' || port > 65535)
    throw SpawnError(fmt::format("BRIDGEWIRE_PORT '{}' is not a port number", v));
  return static_cast<std::uint16_t>(port);
}

/// Reaps `pid`, escalating to SIGKILL after `grace`.
void reap(pid_t pid, std::chrono::milliseconds grace) {
  const auto deadline = std::chrono::steady_clock::now() + grace;
  while (std::chrono::steady_clock::now() < deadline) {
    pid_t r = ::waitpid(pid, nullptr, WNOHANG);
    if (r == pid || (r < 0 && errno != EINTR)) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ::kill(pid, SIGKILL);
  while (::waitpid(pid, nullptr, 0) < 0 && errno == EINTR) {
  }
}

struct Child {
  pid_t pid = -1;
  int stdout_fd = -1;
  std::uint16_t port = 0;
};

Child start_server(const std::string& path, const SpawnOptions& opts) {
  const std::uint16_t port = opts.port ? *opts.port : env_port().value_or(0);
  std::vector<std::string> args = {path, "serve", "--host", opts.host, "--port", std::to_string(port)};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int pipefd[2];
  if (::pipe2(pipefd, O_CLOEXEC) != 0) throw SpawnError(fmt::format("pipe: {}", std::strerror(errno)));
  const pid_t parent = ::getpid();
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    throw SpawnError(fmt::format("fork: {}", std::strerror(errno)));
  }
  if (pid == 0) {
    // Only async-signal-safe calls from here on. The death signal follows
    // the forking thread, not the whole parent process.
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    if (::getppid() != parent) ::_exit(1);
    ::dup2(pipefd[1], STDOUT_FILENO);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(pipefd[1]);

  Child child{pid, pipefd[0], 0};
  auto fail = [&](const std::string& why) -> SpawnError {
    ::kill(pid, SIGKILL);
    reap(pid, std::chrono::milliseconds(0));
    ::close(child.stdout_fd);
    return SpawnError(why);
  };
  const auto deadline = std::chrono::steady_clock::now() + opts.timeout;
  std::string buf;
  static constexpr std::string_view kPrefix = "BRIDGEWIRE LISTENING ";
  while (true) {
    if (auto nl = buf.find('\n'); nl != std::string::npos) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (!line.starts_with(kPrefix)) continue;
      unsigned p = 0;
      auto [end, ec] = std::from_chars(line.data() + kPrefix.size(), line.data() + line.size(), p);
      if (ec != std::errc{} || p == 0 || p > 65535) throw fail(fmt::format("bad announcement '{}'", line));
      child.port = static_cast<std::uint16_t>(p);
      return child;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0)
      throw fail(fmt::format("server '{}' did not announce its port within {} ms", path, opts.timeout.count()));
    pollfd pfd{child.stdout_fd, POLLIN, 0};
    int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0 && errno != EINTR) throw fail(fmt::format("poll: {}", std::strerror(errno)));
    if (r <= 0) continue;
    char tmp[256];
    ssize_t n = ::read(child.stdout_fd, tmp, sizeof tmp);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      ::close(child.stdout_fd);
      if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
        throw SpawnError(fmt::format("could not execute server '{}'", path));
      throw SpawnError(fmt::format("server '{}' exited before announcing its port (status {})", path,
                                   WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status)));
    }
    buf.append(tmp, static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string discover_server(const std::optional<std::string>& explicit_path) {
  if (explicit_path) return checked(*explicit_path, "server binary");
  if (const char* env = std::getenv("BRIDGEWIRE_SERVER_BIN"); env && *env)
    return checked(env, "BRIDGEWIRE_SERVER_BIN");
  if (const char* path = std::getenv("PATH")) {
    std::string_view rest = path;
    while (!rest.empty()) {
      auto colon = rest.find(':');
      auto dir = rest.substr(0, colon);
      rest = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
      if (dir.empty()) continue;
      std::string candidate = std::string(dir) + "/bridgewire";
      if (is_executable_file(candidate)) return candidate;
    }
  }
  throw DiscoveryError(
      "no server executable found: pass a path, set BRIDGEWIRE_SERVER_BIN, or put 'bridgewire' on PATH");
}

// --- session state ----------------------------------------------------------

struct Session::State {
  // Guards the connection objects against interrupt() from another thread.
  mutable std::mutex conn_mu;
  std::unique_ptr<SocketStream> stream;
  std::unique_ptr<WireReader> reader;
  Child child;

  std::atomic<bool> dead{false};
  std::atomic<bool> interrupted{false};
  std::atomic<bool> closed{false};
  std::atomic<std::uint64_t> epoch{1};

  std::optional<SpawnOptions> spawn_options;
  std::string server_path;
  std::string host;
  std::uint16_t port = 0;

  std::shared_ptr<ReleaseQueue> releases = std::make_shared<ReleaseQueue>();

  std::mutex cb_mu;
  std::unordered_map<std::uint64_t, std::weak_ptr<const HostFunction::Fn>> callbacks;
  std::unordered_map<const void*, std::uint64_t> callback_ids;
  std::uint64_t callback_counter = 0;

  OutputSink out_sink;
  OutputSink err_sink;
  FrameTap tap;
  TransferStats retired;

  ~State() { teardown(true); }

  // --- connection lifecycle ---

  void open(int fd) {
    auto s = std::make_unique<SocketStream>(fd);
    try {
      handshake(PeerRole::Client, *s, *s);
    } catch (const std::exception& e) {
      throw SessionError(fmt::format("handshake with {}:{} failed: {}", host, port, e.what()));
    }
    std::lock_guard lock(conn_mu);
    stream = std::move(s);
    reader = std::make_unique<WireReader>(*stream);
  }

  void connect_to(const std::string& h, std::uint16_t p) {
    host = h;
    port = p;
    int fd;
    try {
      fd = tcp_connect(h, p);
    } catch (const IoError& e) {
      throw SessionError(e.what());
    }
    open(fd);
  }

  void start_child() {
    Child c = start_server(server_path, *spawn_options);
    {
      std::lock_guard lock(conn_mu);
      child = c;
    }
    log_info("spawned server pid {} on port {}", c.pid, c.port);
    connect_to(spawn_options->host, c.port);
  }

  void teardown(bool graceful) {
    std::unique_lock lock(conn_mu);
    if (stream) {
      if (graceful && !dead) {
        try {
          write_frame(ByeByeFrame{}, *stream);
          stream->flush();
        } catch (const std::exception&) {
        }
      }
      retired.bytes_sent += stream->bytes_written();
      retired.bytes_received += stream->bytes_read();
      reader.reset();
      stream.reset();
    }
    Child c = std::exchange(child, Child{});
    lock.unlock();
    if (c.pid > 0) {
      ::kill(c.pid, graceful ? SIGTERM : SIGKILL);
      reap(c.pid, graceful ? std::chrono::milliseconds(500) : std::chrono::milliseconds(0));
      ::close(c.stdout_fd);
    }
  }

  /// Invalidates every proxy of the current connection, once.
  void mark_dead() {
    if (!dead.exchange(true)) epoch.fetch_add(1);
  }

  void ensure_live() {
    if (closed) throw SessionError("session is closed");
    if (!dead) return;
    if (!spawn_options)
      throw SessionError(fmt::format("connection to {}:{} is gone; call reconnect()", host, port));
    log_info("restarting server after {}", interrupted ? "interrupt" : "connection loss");
    teardown(false);
    start_child();
    interrupted = false;
    dead = false;
  }

  [[noreturn]] void lost(const std::string& why) {
    const bool was_interrupted = interrupted;
    mark_dead();
    if (was_interrupted) throw InterruptedError("request interrupted");
    throw SessionError(fmt::format("connection lost: {}", why));
  }

  // --- translation hooks ---

  std::uint64_t register_callback(const HostFunction& f) {
    std::lock_guard lock(cb_mu);
    // Forget functions whose last host-side copy is gone.
    for (auto it = callback_ids.begin(); it != callback_ids.end();) {
      auto cb = callbacks.find(it->second);
      if (cb->second.expired()) {
        callbacks.erase(cb);
        it = callback_ids.erase(it);
      } else {
        ++it;
      }
    }
    if (auto it = callback_ids.find(f.identity()); it != callback_ids.end()) return it->second;
    const std::uint64_t id = 2 * callback_counter++ + 1;
    callbacks[id] = f.weak();
    callback_ids[f.identity()] = id;
    return id;
  }

  std::shared_ptr<const HostFunction::Fn> find_callback(std::uint64_t id) {
    std::lock_guard lock(cb_mu);
    auto it = callbacks.find(id);
    return it == callbacks.end() ? nullptr : it->second.lock();
  }

  Ref proxy_ref(const Proxy& p) const {
    if (p.epoch() != epoch)
      throw StaleReferenceError(fmt::format("reference #{} ({}) belongs to an earlier session epoch", p.id(),
                                            p.type_name()));
    return Ref{p.id(), p.type_name()};
  }

  OutboundHooks outbound() {
    return {[this](const Proxy& p) { return proxy_ref(p); },
            [this](const HostFunction& f) { return register_callback(f); }};
  }

  InboundHooks inbound() {
    return {[this](const Ref& r) -> HostValue { return Proxy(r.id, r.type_name, epoch, releases); },
            [this](std::uint64_t id) -> HostValue {
              auto fn = find_callback(id);
              if (!fn) throw SessionError(fmt::format("callback #{} is no longer available", id));
              return HostFunction(fn);
            }};
  }

  Value out(const HostValue& v) { return translate_outbound(v, outbound()); }
  HostValue in(const Value& v) { return translate_inbound(v, inbound()); }

  // --- framing ---

  void send(const Frame& f) {
    write_frame(f, *stream);
    if (tap) tap(Direction::Sent, f);
  }

  std::size_t send_releases() {
    auto entries = releases->take();
    const std::uint64_t now = epoch;
    std::size_t sent = 0;
    for (const auto& e : entries) {
      if (e.epoch != now) continue;  // the server that issued it is gone
      send(ReleaseFrame{e.id});
      ++sent;
    }
    return sent;
  }

  Value request(const Frame& f) {
    ensure_live();
    try {
      send_releases();
      send(f);
      stream->flush();
      return await();
    } catch (const IoError& e) {
      lost(e.what());
    } catch (const DecodeError& e) {
      lost(e.what());
    }
  }

  Value await() {
    while (true) {
      auto f = try_read_frame(*reader);
      if (!f) lost("server closed the connection");
      if (tap) tap(Direction::Received, *f);
      if (auto* o = std::get_if<OutputFrame>(&*f)) {
        emit(o->channel, o->chunk);
      } else if (auto* r = std::get_if<ResultFrame>(&*f)) {
        return std::move(r->value);
      } else if (auto* fail = std::get_if<FailFrame>(&*f)) {
        throw RemoteError(fail->message, fail->detail);
      } else if (auto* call = std::get_if<CallFrame>(&*f)) {
        serve_callback(*call);
      } else if (std::holds_alternative<ReleaseFrame>(*f)) {
        // The server holds no references to client objects.
      } else {
        mark_dead();
        throw SessionError(fmt::format("unexpected {} frame from server", frame_kind_name(frame_kind(*f))));
      }
    }
  }

  void emit(Channel ch, const std::string& chunk) {
    auto& sink = ch == Channel::Out ? out_sink : err_sink;
    if (sink) {
      sink(chunk);
      return;
    }
    std::FILE* file = ch == Channel::Out ? stdout : stderr;
    std::fwrite(chunk.data(), 1, chunk.size(), file);
    std::fflush(file);
  }

  void serve_callback(const CallFrame& call) {
    Frame reply;
    try {
      if (call.callee.kind != CalleeKind::Callback)
        throw Error(fmt::format("the client only serves callbacks, not {}", call.callee.name));
      auto fn = find_callback(call.callee.id);
      if (!fn) throw Error(fmt::format("callback #{} is no longer available", call.callee.id));
      HostArgs args;
      for (const auto& p : call.positional) args.push_back(in(p));
      HostNamedArgs named;
      for (const auto& n : call.named) named.push_back({n.name, in(n.value)});
      HostValue result = (*fn)(args, named);
      reply = ResultFrame{out(result)};
    } catch (const InterruptedError&) {
      throw;
    } catch (const SessionError&) {
      throw;
    } catch (const RemoteError& e) {
      reply = FailFrame{e.message(), e.detail()};
    } catch (const std::exception& e) {
      reply = FailFrame{e.what(), {}};
    }
    send(reply);
    stream->flush();
  }
};

// --- Session ----------------------------------------------------------------

Session Session::connect(const std::string& host, std::uint16_t port) {
  auto state = std::make_shared<State>();
  state->connect_to(host, port);
  return Session(std::move(state));
}

Session Session::spawn(SpawnOptions options) {
  auto state = std::make_shared<State>();
  state->server_path = discover_server(options.server_bin);
  state->spawn_options = std::move(options);
  state->start_child();
  return Session(std::move(state));
}

HostValue Session::call(std::string_view name, const HostArgs& positional, const HostNamedArgs& named) {
  return call(HostValue(RemoteFunction{FnKind::Named, std::string(name)}), positional, named);
}

HostValue Session::call(const HostValue& callee, const HostArgs& positional, const HostNamedArgs& named) {
  auto& s = *state_;
  CallFrame frame;
  if (const auto* p = std::get_if<Proxy>(&callee.variant())) {
    frame.callee = Callee::reference(s.proxy_ref(*p).id);
  } else if (const auto* f = std::get_if<RemoteFunction>(&callee.variant())) {
    frame.callee = Callee::named(f->name);
  } else {
    throw Error("only proxies and remote functions can be called remotely");
  }
  for (const auto& p : positional) frame.positional.push_back(s.out(p));
  for (const auto& n : named) frame.named.push_back({n.name, s.out(n.value)});
  return s.in(s.request(frame));
}

HostValue Session::eval(std::string_view source) {
  auto& s = *state_;
  return s.in(s.request(EvalFrame{std::string(source)}));
}

HostValue Session::let_eval(std::string_view source, const HostNamedArgs& bindings) {
  auto& s = *state_;
  LetFrame frame{std::string(source), {}};
  for (const auto& b : bindings) frame.bindings.push_back({b.name, s.out(b.value)});
  return s.in(s.request(frame));
}

Proxy Session::put(const HostValue& value) {
  auto& s = *state_;
  Value v = s.request(PutFrame{s.out(value)});
  const auto* ref = v.get_if<Ref>();
  if (!ref) throw SessionError(fmt::format("PUT answered with {} instead of a reference", tag_name(v.tag())));
  return Proxy(ref->id, ref->type_name, s.epoch, s.releases);
}

HostValue Session::fetch(const Proxy& proxy) {
  auto& s = *state_;
  const auto id = s.proxy_ref(proxy).id;
  return s.in(s.request(FetchFrame{id}));
}

HostTable Session::to_table(const Proxy& proxy) {
  if (proxy.type_name() != "Table")
    throw NotATableError(fmt::format("reference #{} is a {}, not a table", proxy.id(), proxy.type_name()));
  auto v = fetch(proxy);
  if (!v.is<HostTable>()) throw NotATableError(fmt::format("reference #{} did not translate to a table", proxy.id()));
  return v.as<HostTable>();
}

ImportedEnv Session::import_module(std::string_view path, bool include_unexported) {
  auto& s = *state_;
  Value v = s.request(ScanFrame{std::string(path), include_unexported});
  const auto* t = v.get_if<Table>();
  if (!t || t->columns.size() != 3)
    throw SessionError(fmt::format("SCAN answered with {} instead of a symbol table", tag_name(v.tag())));
  const auto& names = t->columns[0].data.as<std::string>();
  const auto& kinds = t->columns[1].data.as<std::string>();
  const auto& aliases = t->columns[2].data.as<std::string>();
  std::vector<ImportedEnv::Symbol> symbols;
  for (std::size_t i = 0; i < names.size(); ++i) symbols.push_back({names[i], kinds[i], aliases[i]});
  return ImportedEnv(*this, std::string(path), std::move(symbols));
}

std::size_t Session::release_flush() {
  auto& s = *state_;
  if (s.closed) throw SessionError("session is closed");
  if (s.dead)
    throw SessionError(fmt::format("session is not connected; {} release(s) kept queued", s.releases->size()));
  try {
    std::size_t n = s.send_releases();
    s.stream->flush();
    return n;
  } catch (const IoError& e) {
    s.lost(e.what());
  }
}

std::size_t Session::pending_releases() const { return state_->releases->size(); }

void Session::interrupt() {
  auto& s = *state_;
  std::lock_guard lock(s.conn_mu);
  if (s.closed) return;
  s.interrupted = true;
  s.mark_dead();
  if (s.child.pid > 0) ::kill(s.child.pid, SIGKILL);
  if (s.stream) s.stream->shutdown();
}

void Session::reconnect() {
  auto& s = *state_;
  if (s.closed) throw SessionError("session is closed");
  if (s.spawn_options) {
    s.ensure_live();
    return;
  }
  if (!s.dead) return;
  s.teardown(false);
  s.connect_to(s.host, s.port);
  s.interrupted = false;
  s.dead = false;
}

void Session::close() {
  auto& s = *state_;
  if (s.closed.exchange(true)) return;
  s.teardown(true);
}

std::uint64_t Session::epoch() const { return state_->epoch; }
bool Session::spawned() const { return state_->spawn_options.has_value(); }
bool Session::alive() const { return !state_->closed && !state_->dead; }

void Session::set_output_sinks(OutputSink out, OutputSink err) {
  state_->out_sink = std::move(out);
  state_->err_sink = std::move(err);
}

void Session::set_frame_tap(FrameTap tap) { state_->tap = std::move(tap); }

TransferStats Session::stats() const {
  auto& s = *state_;
  std::lock_guard lock(s.conn_mu);
  TransferStats t = s.retired;
  if (s.stream) {
    t.bytes_sent += s.stream->bytes_written();
    t.bytes_received += s.stream->bytes_read();
  }
  return t;
}

bool setup_ok(const std::optional<std::string>& server_bin) {
  try {
    SpawnOptions opts;
    opts.server_bin = server_bin;
    auto s = Session::spawn(opts);
    bool ok = s.call("Base.sqrt", {4.0}).as_double() == 2.0;
    s.close();
    return ok;
  } catch (const std::exception& e) {
    log_info("setup check failed: {}", e.what());
    return false;
  }
}

// --- ImportedEnv --------------------------------------------------------------

ImportedEnv::ImportedEnv(Session session, std::string module, std::vector<Symbol> symbols)
    : session_(std::move(session)), module_(std::move(module)), symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    index_.emplace(symbols_[i].name, i);
    if (symbols_[i].alias != symbols_[i].name) index_.emplace(symbols_[i].alias, i);
  }
}

bool ImportedEnv::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

RemoteCallable ImportedEnv::operator[](std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range(fmt::format("module {} has no symbol '{}'", module_, name));
  const auto& sym = symbols_[it->second];
  const FnKind kind = sym.kind == "type" ? FnKind::TypeConstructor : FnKind::Named;
  return RemoteCallable(session_, RemoteFunction{kind, module_ + "." + sym.name});
}

}  // namespace bridgewire::client
