#pragma once

/// @file wire.hpp
/// @brief Streaming binary codec and framing for the bridge protocol.
///
/// All integers are little-endian, strings are a u32 byte length followed by
/// UTF-8. Values and frames are self-delimiting, so a reader never needs a
/// whole-message length and can parse while bytes are still arriving.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bridgewire/io.hpp"
#include "bridgewire/value.hpp"

namespace bridgewire {

inline constexpr std::array<std::uint8_t, 4> kMagic = {0x42, 0x57, 0x52, 0x31};
inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;
inline constexpr std::size_t kMaxDepth = 256;

enum class DecodeErrorKind {
  PrematureEnd,
  UnknownTag,
  UnknownElemType,
  UnknownFrameKind,
  UnknownCalleeKind,
  UnknownFnKind,
  UnknownFlags,
  DimsOverflow,
  NegativeDim,
  InvalidUtf8,
  InvalidBool,
  InvalidBitmap,
  NonzeroPlaceholder,
  InvalidTable,
  InvalidStruct,
  DuplicateName,
  ReservedCallbackId,
  TooDeep,
};

std::string_view decode_error_kind_name(DecodeErrorKind k);

/// A malformed or truncated encoding, with the byte offset where it was found.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, std::uint64_t offset, const std::string& what);
  DecodeErrorKind kind() const { return kind_; }
  std::uint64_t offset() const { return offset_; }

 private:
  DecodeErrorKind kind_;
  std::uint64_t offset_;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HandshakeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pull-based reader tracking the absolute offset for diagnostics.
class WireReader {
 public:
  explicit WireReader(ByteSource& src) : src_(src) {}

  /// Fills `out` completely or throws PrematureEnd.
  void read_exact(std::span<std::uint8_t> out);
  /// Reads one byte, or returns false at a clean end of stream.
  bool try_read_byte(std::uint8_t& b);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  std::string str();

  std::uint64_t offset() const { return offset_; }

 private:
  ByteSource& src_;
  std::uint64_t offset_ = 0;
};

/// Writes little-endian primitives and counts bytes.
class WireWriter {
 public:
  explicit WireWriter(ByteSink& sink) : sink_(sink) {}
  void bytes(std::span<const std::uint8_t> b) {
    sink_.write(b);
    count_ += b.size();
  }
  void u8(std::uint8_t v) { bytes({&v, 1}); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void str(std::string_view s);
  std::size_t count() const { return count_; }

 private:
  ByteSink& sink_;
  std::size_t count_ = 0;
};

/// Writes the encoding of `v`; returns the byte count.
std::size_t encode_value(const Value& v, ByteSink& sink);
void encode_value(const Value& v, WireWriter& w);
std::vector<std::uint8_t> encode_to_bytes(const Value& v);

/// Reads exactly one encoded value.
Value decode_value(ByteSource& src);
Value decode_value(WireReader& r);
/// Decodes a buffer that must hold exactly one value.
Value decode_from_bytes(std::span<const std::uint8_t> bytes);

// --- frames ---------------------------------------------------------------

enum class FrameKind : std::uint8_t {
  Call = 0x01,
  Result = 0x02,
  Fail = 0x03,
  Release = 0x04,
  Eval = 0x05,
  Let = 0x06,
  Fetch = 0x07,
  Put = 0x08,
  Scan = 0x09,
  ByeBye = 0x0F,
  Out = 0x50,
  Err = 0x51,
};

std::string_view frame_kind_name(FrameKind k);

enum class CalleeKind : std::uint8_t { Named = 0x00, Reference = 0x01, Callback = 0x02 };

struct Callee {
  CalleeKind kind = CalleeKind::Named;
  std::string name;     // Named
  std::uint64_t id = 0;  // Reference, Callback

  static Callee named(std::string n) { return {CalleeKind::Named, std::move(n), 0}; }
  static Callee reference(std::uint64_t id) { return {CalleeKind::Reference, {}, id}; }
  static Callee callback(std::uint64_t id) { return {CalleeKind::Callback, {}, id}; }
  friend bool operator==(const Callee&, const Callee&) = default;
};

struct CallFrame {
  Callee callee;
  std::vector<Value> positional;
  std::vector<Field> named;
  friend bool operator==(const CallFrame&, const CallFrame&) = default;
};
struct ResultFrame {
  Value value;
  friend bool operator==(const ResultFrame&, const ResultFrame&) = default;
};
struct FailFrame {
  std::string message;
  std::string detail;
  friend bool operator==(const FailFrame&, const FailFrame&) = default;
};
struct ReleaseFrame {
  std::uint64_t id = 0;
  friend bool operator==(const ReleaseFrame&, const ReleaseFrame&) = default;
};
struct EvalFrame {
  std::string expression;
  friend bool operator==(const EvalFrame&, const EvalFrame&) = default;
};
struct LetFrame {
  std::string expression;
  std::vector<Field> bindings;
  friend bool operator==(const LetFrame&, const LetFrame&) = default;
};
struct FetchFrame {
  std::uint64_t id = 0;
  friend bool operator==(const FetchFrame&, const FetchFrame&) = default;
};
struct PutFrame {
  Value value;
  friend bool operator==(const PutFrame&, const PutFrame&) = default;
};
struct ScanFrame {
  std::string module_path;
  bool include_unexported = false;
  friend bool operator==(const ScanFrame&, const ScanFrame&) = default;
};
enum class Channel : std::uint8_t { Out, Err };
struct OutputFrame {
  Channel channel = Channel::Out;
  std::string chunk;
  friend bool operator==(const OutputFrame&, const OutputFrame&) = default;
};
struct ByeByeFrame {
  friend bool operator==(const ByeByeFrame&, const ByeByeFrame&) = default;
};

using Frame = std::variant<CallFrame, ResultFrame, FailFrame, ReleaseFrame, EvalFrame, LetFrame,
                           FetchFrame, PutFrame, ScanFrame, OutputFrame, ByeByeFrame>;

FrameKind frame_kind(const Frame& f);

std::size_t write_frame(const Frame& f, ByteSink& sink);
std::vector<std::uint8_t> frame_to_bytes(const Frame& f);
Frame read_frame(ByteSource& src);
Frame read_frame(WireReader& r);
/// Like read_frame, but returns nullopt when the stream ends cleanly at a
/// frame boundary.
std::optional<Frame> try_read_frame(WireReader& r);

// --- handshake ------------------------------------------------------------

enum class PeerRole { Client, Server };

/// Exchanges magic and version. The client speaks first; the server answers
/// with its own version. Either side fails on a magic or version mismatch.
std::uint32_t handshake(PeerRole role, ByteSource& in, ByteSink& out,
                        std::uint32_t version = kProtocolVersion);

}  // namespace bridgewire
