#include <fmt/format.h>

#include <unordered_set>

#include "bridgewire/wire.hpp"

namespace bridgewire {

std::string_view frame_kind_name(FrameKind k) {
  switch (k) {
    case FrameKind::Call: return "CALL";
    case FrameKind::Result: return "RESULT";
    case FrameKind::Fail: return "FAIL";
    case FrameKind::Release: return "RELEASE";
    case FrameKind::Eval: return "EVAL";
    case FrameKind::Let: return "LET";
    case FrameKind::Fetch: return "FETCH";
    case FrameKind::Put: return "PUT";
    case FrameKind::Scan: return "SCAN";
    case FrameKind::ByeBye: return "BYEBYE";
    case FrameKind::Out: return "OUT";
    case FrameKind::Err: return "ERR";
  }
  return "?";
}

FrameKind frame_kind(const Frame& f) {
  return std::visit(
      [](const auto& x) -> FrameKind {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CallFrame>) return FrameKind::Call;
        else if constexpr (std::is_same_v<T, ResultFrame>) return FrameKind::Result;
        else if constexpr (std::is_same_v<T, FailFrame>) return FrameKind::Fail;
        else if constexpr (std::is_same_v<T, ReleaseFrame>) return FrameKind::Release;
        else if constexpr (std::is_same_v<T, EvalFrame>) return FrameKind::Eval;
        else if constexpr (std::is_same_v<T, LetFrame>) return FrameKind::Let;
        else if constexpr (std::is_same_v<T, FetchFrame>) return FrameKind::Fetch;
        else if constexpr (std::is_same_v<T, PutFrame>) return FrameKind::Put;
        else if constexpr (std::is_same_v<T, ScanFrame>) return FrameKind::Scan;
        else if constexpr (std::is_same_v<T, OutputFrame>)
          return x.channel == Channel::Out ? FrameKind::Out : FrameKind::Err;
        else return FrameKind::ByeBye;
      },
      f);
}

namespace {

void write_named(const std::vector<Field>& named, WireWriter& w) {
  w.u32(static_cast<std::uint32_t>(named.size()));
  for (const auto& f : named) {
    w.str(f.name);
    encode_value(f.value, w);
  }
}

std::vector<Field> read_named(WireReader& r) {
  const std::uint32_t n = r.u32();
  std::vector<Field> out;
  out.reserve(std::min<std::uint32_t>(n, 1024));
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto off = r.offset();
    std::string name = r.str();
    if (!seen.insert(name).second)
      throw DecodeError(DecodeErrorKind::DuplicateName, off, fmt::format("argument '{}'", name));
    Value v = decode_value(r);
    out.push_back({std::move(name), std::move(v)});
  }
  return out;
}

}  // namespace

std::size_t write_frame(const Frame& f, ByteSink& sink) {
  WireWriter w(sink);
  w.u8(static_cast<std::uint8_t>(frame_kind(f)));
  std::visit(
      [&w](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CallFrame>) {
          w.u8(static_cast<std::uint8_t>(x.callee.kind));
          if (x.callee.kind == CalleeKind::Named) {
            w.str(x.callee.name);
          } else {
            if (x.callee.kind == CalleeKind::Callback && x.callee.id == 0)
              throw EncodeError("callback id 0 is reserved");
            w.u64(x.callee.id);
          }
          w.u32(static_cast<std::uint32_t>(x.positional.size()));
          for (const auto& v : x.positional) encode_value(v, w);
          write_named(x.named, w);
        } else if constexpr (std::is_same_v<T, ResultFrame> || std::is_same_v<T, PutFrame>) {
          encode_value(x.value, w);
        } else if constexpr (std::is_same_v<T, FailFrame>) {
          w.str(x.message);
          w.str(x.detail);
        } else if constexpr (std::is_same_v<T, ReleaseFrame> || std::is_same_v<T, FetchFrame>) {
          w.u64(x.id);
        } else if constexpr (std::is_same_v<T, EvalFrame>) {
          w.str(x.expression);
        } else if constexpr (std::is_same_v<T, LetFrame>) {
          w.str(x.expression);
          write_named(x.bindings, w);
        } else if constexpr (std::is_same_v<T, ScanFrame>) {
          w.str(x.module_path);
          w.u8(x.include_unexported ? 0x01 : 0x00);
        } else if constexpr (std::is_same_v<T, OutputFrame>) {
          w.str(x.chunk);
        }
      },
      f);
  return w.count();
}

std::vector<std::uint8_t> frame_to_bytes(const Frame& f) {
  VectorSink sink;
  write_frame(f, sink);
  return sink.take();
}

namespace {

Frame read_payload(WireReader& r, std::uint8_t kind, std::uint64_t start) {
  switch (static_cast<FrameKind>(kind)) {
    case FrameKind::Call: {
      CallFrame c;
      const auto off = r.offset();
      const std::uint8_t ck = r.u8();
      switch (static_cast<CalleeKind>(ck)) {
        case CalleeKind::Named: c.callee = Callee::named(r.str()); break;
        case CalleeKind::Reference: c.callee = Callee::reference(r.u64()); break;
        case CalleeKind::Callback: {
          const auto id_off = r.offset();
          c.callee = Callee::callback(r.u64());
          if (c.callee.id == 0) throw DecodeError(DecodeErrorKind::ReservedCallbackId, id_off, "");
          break;
        }
        default:
          throw DecodeError(DecodeErrorKind::UnknownCalleeKind, off, fmt::format("0x{:02x}", ck));
      }
      const std::uint32_t npos = r.u32();
      c.positional.reserve(std::min<std::uint32_t>(npos, 1024));
      for (std::uint32_t i = 0; i < npos; ++i) c.positional.push_back(decode_value(r));
      c.named = read_named(r);
      return c;
    }
    case FrameKind::Result: return ResultFrame{decode_value(r)};
    case FrameKind::Fail: {
      FailFrame f;
      f.message = r.str();
      f.detail = r.str();
      return f;
    }
    case FrameKind::Release: return ReleaseFrame{r.u64()};
    case FrameKind::Eval: return EvalFrame{r.str()};
    case FrameKind::Let: {
      LetFrame l;
      l.expression = r.str();
      l.bindings = read_named(r);
      return l;
    }
    case FrameKind::Fetch: return FetchFrame{r.u64()};
    case FrameKind::Put: return PutFrame{decode_value(r)};
    case FrameKind::Scan: {
      ScanFrame s;
      s.module_path = r.str();
      const auto off = r.offset();
      const std::uint8_t flags = r.u8();
      if (flags & ~0x01u)
        throw DecodeError(DecodeErrorKind::UnknownFlags, off, fmt::format("scan flags 0x{:02x}", flags));
      s.include_unexported = (flags & 0x01) != 0;
      return s;
    }
    case FrameKind::Out: return OutputFrame{Channel::Out, r.str()};
    case FrameKind::Err: return OutputFrame{Channel::Err, r.str()};
    case FrameKind::ByeBye: return ByeByeFrame{};
  }
  throw DecodeError(DecodeErrorKind::UnknownFrameKind, start, fmt::format("0x{:02x}", kind));
}

}  // namespace

std::optional<Frame> try_read_frame(WireReader& r) {
  const auto start = r.offset();
  std::uint8_t kind;
  if (!r.try_read_byte(kind)) return std::nullopt;
  return read_payload(r, kind, start);
}

Frame read_frame(WireReader& r) {
  const auto start = r.offset();
  auto f = try_read_frame(r);
  if (!f) throw DecodeError(DecodeErrorKind::PrematureEnd, start, "expected a frame");
  return std::move(*f);
}

Frame read_frame(ByteSource& src) {
  WireReader r(src);
  return read_frame(r);
}

std::uint32_t handshake(PeerRole role, ByteSource& in, ByteSink& out, std::uint32_t version) {
  auto send = [&] {
    WireWriter w(out);
    w.bytes(kMagic);
    w.u32(version);
    out.flush();
  };
  auto receive = [&] {
    WireReader r(in);
    std::array<std::uint8_t, 4> magic{};
    try {
      r.read_exact(magic);
    } catch (const DecodeError&) {
      throw HandshakeError("connection closed during handshake");
    }
    if (magic != kMagic)
      throw HandshakeError(fmt::format("magic mismatch: got {:02x} {:02x} {:02x} {:02x}", magic[0],
                                       magic[1], magic[2], magic[3]));
    try {
      return r.u32();
    } catch (const DecodeError&) {
      throw HandshakeError("connection closed during handshake");
    }
  };
  if (role == PeerRole::Client) {
    send();
    const auto theirs = receive();
    if (theirs != version)
      throw HandshakeError(fmt::format("version mismatch: client {}, server {}", version, theirs));
    return version;
  }
  const auto theirs = receive();
  send();
  if (theirs != version)
    throw HandshakeError(fmt::format("version mismatch: client {}, server {}", theirs, version));
  return version;
}

}  // namespace bridgewire
