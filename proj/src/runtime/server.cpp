#include "bridgewire/runtime/server.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <ostream>

#include "bridgewire/log.hpp"
#include "bridgewire/runtime/builtins.hpp"
#include "bridgewire/translate.hpp"

namespace bridgewire::rt {

// --- registry -----------------------------------------------------------------

Ref ObjectRegistry::add(const ObjectPtr& obj) {
  auto it = by_object_.find(obj.get());
  if (it != by_object_.end()) {
    ++entries_.at(it->second).refcount;
    return Ref{it->second, type_name(*obj)};
  }
  const std::uint64_t id = 2 * ++counter_;
  entries_.emplace(id, Entry{obj, 1});
  by_object_.emplace(obj.get(), id);
  return Ref{id, type_name(*obj)};
}

ObjectPtr ObjectRegistry::get(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end())
    throw EvalError(fmt::format("UnknownReference: no object with id {} (released or never issued)", id));
  return it->second.object;
}

bool ObjectRegistry::release(std::uint64_t id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) return false;
  if (--it->second.refcount == 0) {
    by_object_.erase(it->second.object.get());
    entries_.erase(it);
  }
  return true;
}

// --- reconstruction -----------------------------------------------------------

namespace {

TypedArray widen(const TypedArray& a) {
  return a.type() == ElemType::I32 ? convert_array(a, ElemType::I64) : a;
}

const TypeConstructor* struct_constructor(const ModuleTable& modules, const std::string& type_name) {
  const auto* e = modules.resolve(type_name);
  if (!e || e->kind != EntityKind::Type) return nullptr;
  const auto* f = e->object->get_if<FunctionObj>();
  if (!f) return nullptr;
  const auto* t = dynamic_cast<const TypeConstructor*>(f->fn.get());
  return t && t->is_struct() ? t : nullptr;
}

}  // namespace

ObjectPtr reconstruct(const Value& v, const ModuleTable& modules, const ObjectRegistry& registry) {
  auto fields = [&](const std::vector<Field>& in) {
    std::vector<NamedObject> out;
    out.reserve(in.size());
    for (const auto& f : in) out.push_back({f.name, reconstruct(f.value, modules, registry)});
    return out;
  };
  return std::visit(
      [&](const auto& x) -> ObjectPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          return make(Null{});
        } else if constexpr (std::is_same_v<T, TypedArray>) {
          return make(widen(x));
        } else if constexpr (std::is_same_v<T, List>) {
          ListObj out;
          out.items.reserve(x.items.size());
          for (const auto& item : x.items) out.items.push_back(reconstruct(item, modules, registry));
          return make(std::move(out));
        } else if constexpr (std::is_same_v<T, NamedList>) {
          return make(NamedListObj{fields(x.entries)});
        } else if constexpr (std::is_same_v<T, Struct>) {
          auto fs = fields(x.fields);
          if (const auto* ctor = struct_constructor(modules, x.type_name)) {
            const auto& spec = ctor->field_specs();
            if (fs.size() != spec.size())
              throw EvalError(fmt::format("MethodError: {} has {} field(s), got {}", x.type_name, spec.size(),
                                          fs.size()));
            std::vector<ObjectPtr> ordered;
            for (const auto& s : spec) {
              auto it = std::find_if(fs.begin(), fs.end(), [&](const NamedObject& f) { return f.name == s.name; });
              if (it == fs.end())
                throw EvalError(fmt::format("MethodError: {} value lacks field '{}'", x.type_name, s.name));
              ordered.push_back(it->value);
            }
            return ctor->construct(ordered);
          }
          return make(StructObj{x.type_name, std::move(fs), false});
        } else if constexpr (std::is_same_v<T, Ref>) {
          return registry.get(x.id);
        } else if constexpr (std::is_same_v<T, FnRef>) {
          if (x.kind == FnKind::Callback) return make(FunctionObj{std::make_shared<Callback>(x.callback_id)});
          const auto* e = modules.resolve(x.name);
          const EntityKind want = x.kind == FnKind::Named ? EntityKind::Function : EntityKind::Type;
          if (!e || e->kind != want)
            throw EvalError(fmt::format("UndefVarError: {} {} not defined", entity_kind_name(want), x.name));
          return e->object;
        } else {
          Table out;
          for (const auto& c : x.columns) out.columns.push_back({c.name, widen(c.data)});
          return make(std::move(out));
        }
      },
      v.variant());
}

// --- session ------------------------------------------------------------------

namespace {

/// The client went away; unwinds the session.
class SessionEnded : public std::runtime_error {
 public:
  SessionEnded() : std::runtime_error("session ended") {}
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output produced during evaluation, waiting to be written as OUT/ERR frames.
class CaptureBuffer {
 public:
  void push(Channel ch, std::string chunk) {
    {
      std::lock_guard lock(mu_);
      if (!queue_.empty() && queue_.back().channel == ch)
        queue_.back().chunk += chunk;
      else
        queue_.push_back({ch, std::move(chunk)});
    }
    cv_.notify_one();
  }

  std::deque<OutputFrame> take() {
    std::lock_guard lock(mu_);
    return std::exchange(queue_, {});
  }

  /// Blocks until output is pending or stop() was called; false on stop.
  bool wait() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
    return !stop_;
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<OutputFrame> queue_;
  bool stop_ = false;
};

class Session final : public CallContext {
 public:
  Session(SocketStream& stream, const ModuleTable& modules)
      : stream_(stream), reader_(stream), modules_(modules), forwarder_([this] { forward(); }) {}

  ~Session() override {
    capture_.stop();
    forwarder_.join();
  }

  void run() {
    while (true) {
      std::optional<Frame> f;
      f = try_read_frame(reader_);
      if (!f) return;
      if (std::holds_alternative<ByeByeFrame>(*f)) {
        log_debug("client said goodbye");
        return;
      }
      if (auto* rel = std::get_if<ReleaseFrame>(&*f)) {
        release(rel->id);
        continue;
      }
      send(handle_request(std::move(*f)));
    }
  }

  std::size_t registry_size() const override { return registry_.size(); }
  const ModuleTable& modules() const override { return modules_; }

  void emit(Channel channel, std::string chunk) override { capture_.push(channel, std::move(chunk)); }

  bool cancelled() override {
    // Polling the socket on every AST node would dominate evaluation time.
    const auto now = std::chrono::steady_clock::now();
    if (now - last_poll_ < std::chrono::milliseconds(2)) return false;
    last_poll_ = now;
    return stream_.peer_closed();
  }

  ObjectPtr invoke_callback(std::uint64_t id, const std::vector<ObjectPtr>& positional,
                            const std::vector<NamedObject>& named) override {
    CallFrame call{Callee::callback(id), {}, {}};
    for (const auto& p : positional) call.positional.push_back(to_wire(p));
    for (const auto& n : named) call.named.push_back({n.name, to_wire(n.value)});
    log_debug("calling back #{} with {} argument(s)", id, positional.size());
    send(call);
    while (true) {
      auto f = try_read_frame(reader_);
      if (!f || std::holds_alternative<ByeByeFrame>(*f)) throw SessionEnded();
      if (auto* r = std::get_if<ResultFrame>(&*f)) return reconstruct(r->value, modules_, registry_);
      if (auto* fail = std::get_if<FailFrame>(&*f)) {
        std::string detail = fail->message;
        if (!fail->detail.empty()) detail += "\n" + fail->detail;
        throw EvalError(fmt::format("callback #{} raised an error", id), detail);
      }
      if (auto* rel = std::get_if<ReleaseFrame>(&*f)) {
        release(rel->id);
        continue;
      }
      send(handle_request(std::move(*f)));
    }
  }

 private:
  void release(std::uint64_t id) {
    if (!registry_.release(id)) log_info("release of unknown id {}", id);
  }

  Value to_wire(const ObjectPtr& obj) {
    if (classify_result(*obj) == ResultMode::Full) return deep_translate(obj);
    return registry_.add(obj);
  }

  Frame handle_request(Frame&& f) {
    try {
      return ResultFrame{std::visit([this](auto& x) { return dispatch(x); }, f)};
    } catch (const SessionEnded&) {
      throw;
    } catch (const Cancelled&) {
      throw;
    } catch (const ProtocolError&) {
      throw;
    } catch (const IoError&) {
      throw;
    } catch (const EvalError& e) {
      return FailFrame{e.what(), e.detail()};
    } catch (const std::exception& e) {
      return FailFrame{e.what(), {}};
    }
  }

  Value dispatch(CallFrame& c) {
    ObjectPtr callee;
    switch (c.callee.kind) {
      case CalleeKind::Named: {
        const auto* e = modules_.resolve(c.callee.name);
        if (!e) throw EvalError(fmt::format("UndefVarError: {} not defined", c.callee.name));
        callee = e->object;
        break;
      }
      case CalleeKind::Reference: callee = registry_.get(c.callee.id); break;
      case CalleeKind::Callback:
        throw EvalError(fmt::format("cannot call client callback #{} from the client", c.callee.id));
    }
    std::vector<ObjectPtr> positional;
    for (const auto& p : c.positional) positional.push_back(reconstruct(p, modules_, registry_));
    std::vector<NamedObject> named;
    for (const auto& n : c.named) named.push_back({n.name, reconstruct(n.value, modules_, registry_)});
    return to_wire(call_object(callee, *this, positional, named));
  }

  Value dispatch(EvalFrame& e) { return to_wire(eval_expression(e.expression, {}, *this)); }

  Value dispatch(LetFrame& l) {
    std::vector<NamedObject> bindings;
    for (const auto& b : l.bindings) bindings.push_back({b.name, reconstruct(b.value, modules_, registry_)});
    return to_wire(eval_expression(l.expression, bindings, *this));
  }

  Value dispatch(FetchFrame& f) { return deep_translate(registry_.get(f.id)); }

  Value dispatch(PutFrame& p) { return registry_.add(reconstruct(p.value, modules_, registry_)); }

  Value dispatch(ScanFrame& s) {
    auto symbols = scan_module(modules_, s.module_path, s.include_unexported);
    std::vector<std::string> names, kinds, aliases;
    for (auto& sym : symbols) {
      names.push_back(sym.name);
      kinds.emplace_back(entity_kind_name(sym.kind));
      aliases.push_back(sym.alias);
    }
    Table t;
    t.columns.push_back({"name", TypedArray::vector(std::move(names))});
    t.columns.push_back({"kind", TypedArray::vector(std::move(kinds))});
    t.columns.push_back({"alias", TypedArray::vector(std::move(aliases))});
    return t;
  }

  template <class F>
  Value dispatch(F& f) {
    throw ProtocolError(fmt::format("unexpected {} frame from client", frame_kind_name(frame_kind(Frame{f}))));
  }

  /// Writes pending output, then `f`, as one serialized unit.
  void send(const Frame& f) {
    std::lock_guard lock(write_mu_);
    drain_locked();
    write_frame(f, stream_);
    stream_.flush();
  }

  void drain_locked() {
    for (auto& out : capture_.take()) write_frame(out, stream_);
  }

  void forward() {
    while (capture_.wait()) {
      try {
        std::lock_guard lock(write_mu_);
        drain_locked();
        stream_.flush();
      } catch (const std::exception& e) {
        // The session thread notices the broken connection on its own.
        log_debug("output forwarding failed: {}", e.what());
      }
    }
  }

  SocketStream& stream_;
  WireReader reader_;
  const ModuleTable& modules_;
  ObjectRegistry registry_;
  CaptureBuffer capture_;
  std::mutex write_mu_;
  std::chrono::steady_clock::time_point last_poll_{};
  std::thread forwarder_;
};

}  // namespace

void serve_session(SocketStream& stream, const ModuleTable& modules) {
  Session session(stream, modules);
  try {
    session.run();
  } catch (const SessionEnded&) {
  } catch (const Cancelled&) {
    log_info("evaluation cancelled: client disconnected");
  }
}

namespace {

void serve_stream(SocketStream& stream, const ModuleTable& modules) {
  try {
    handshake(PeerRole::Server, stream, stream);
    log_info("session started");
    serve_session(stream, modules);
    log_info("session ended");
  } catch (const std::exception& e) {
    log_info("connection closed: {}", e.what());
  }
}

}  // namespace

void serve_connection(int fd, const ModuleTable& modules) {
  SocketStream stream(fd);
  serve_stream(stream, modules);
}

// --- server -------------------------------------------------------------------

Server::Server(std::shared_ptr<const ModuleTable> modules) : modules_(std::move(modules)) {}

Server::~Server() { stop(); }

std::uint16_t Server::listen(const std::string& host, std::uint16_t port) {
  listen_fd_ = tcp_listen(host, port, port_);
  return port_;
}

void Server::handle(int fd) {
  SocketStream stream(fd);
  serve_stream(stream, *modules_);
  // Forget the fd before it closes so stop() never touches a reused number.
  std::lock_guard lock(mu_);
  live_fds_.erase(fd);
}

void Server::run(bool once) {
  while (!stopping_) {
    int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (!stopping_) log_info("accept failed: {}", std::strerror(errno));
      return;
    }
    std::lock_guard lock(mu_);
    live_fds_.insert(fd);
    if (once) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      mu_.unlock();
      handle(fd);
      mu_.lock();
      return;
    }
    reap_locked();
    auto done = std::make_shared<std::atomic<bool>>(false);
    sessions_.push_back({std::thread([this, fd, done] {
                           handle(fd);
                           *done = true;
                         }),
                         done});
  }
}

void Server::reap_locked() {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (*it->done) {
      it->thread.join();
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

void Server::start() {
  accept_thread_ = std::thread([this] { run(false); });
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard lock(mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& s : sessions_) s.thread.join();
  sessions_.clear();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

int run_server(const std::string& host, std::uint16_t port, bool once, std::ostream& announce) {
  auto modules = std::make_shared<const ModuleTable>(default_modules());
  Server server(modules);
  server.listen(host, port);
  announce << "BRIDGEWIRE LISTENING " << server.port() << std::endl;
  log_info("listening on {}:{}", host, server.port());
  server.run(once);
  return 0;
}

}  // namespace bridgewire::rt
