#include <doctest.h>
#include <sys/socket.h>

#include <cmath>
#include <future>
#include <limits>

#include "bridgewire/conformance/generator.hpp"
#include "bridgewire/wire.hpp"

using namespace bridgewire;
using Bytes = std::vector<std::uint8_t>;

namespace {

Value decode_chunked(const Bytes& b, std::size_t chunk) {
  SpanSource src(b, chunk);
  WireReader r(src);
  Value v = decode_value(r);
  REQUIRE(src.exhausted());
  return v;
}

DecodeErrorKind decode_error(const Bytes& b) {
  try {
    decode_from_bytes(b);
  } catch (const DecodeError& e) {
    return e.kind();
  }
  FAIL("decode succeeded");
  return DecodeErrorKind::PrematureEnd;
}

Bytes scalar_f64_header() { return {0x01, 0x01, 0x00, 0x00}; }

}  // namespace

TEST_CASE("scalar float encodes to the fixed byte layout") {
  const Bytes expected = {0x01, 0x01, 0x00, 0x00, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  CHECK(encode_to_bytes(TypedArray::scalar(1.0)) == expected);
  CHECK(decode_from_bytes(expected) == Value(TypedArray::scalar(1.0)));
}

TEST_CASE("missing element sets its bitmap bit and keeps a zeroed slot") {
  auto a = TypedArray::vector<double>({1.0, 7.0, 3.0});
  a.set_missing(1);
  const auto bytes = encode_to_bytes(a);
  const Bytes expected = {0x01, 0x01, 0x01, 0x01, 3, 0, 0, 0, 0, 0, 0, 0, 0x02,
                          0,    0,    0,    0,    0, 0, 0xF0, 0x3F,
                          0,    0,    0,    0,    0, 0, 0,    0,
                          0,    0,    0,    0,    0, 0, 0x08, 0x40};
  CHECK(bytes == expected);
}

TEST_CASE("numeric arrays have fixed stride") {
  for (std::uint8_t code = 1; code <= 11; ++code) {
    const auto t = static_cast<ElemType>(code);
    if (t == ElemType::String) continue;
    CAPTURE(elem_type_name(t));
    for (bool bitmap : {false, true}) {
      auto a = TypedArray::zeros(t, {3, 5});
      if (bitmap) a.ensure_bitmap();
      const std::size_t header = 1 + 3 + 2 * 8;
      CHECK(encode_to_bytes(a).size() == header + (bitmap ? 2 : 0) + 15 * elem_width(t));
    }
  }
}

TEST_CASE("frames with fixed encodings") {
  CHECK(frame_to_bytes(ReleaseFrame{7}) == Bytes{0x04, 7, 0, 0, 0, 0, 0, 0, 0});
  CHECK(frame_to_bytes(ByeByeFrame{}) == Bytes{0x0F});
}

TEST_CASE("unknown frame kind is a fatal decode error") {
  const Bytes b = {0xFF};
  SpanSource src(b);
  try {
    read_frame(src);
    FAIL("accepted 0xFF");
  } catch (const DecodeError& e) {
    CHECK(e.kind() == DecodeErrorKind::UnknownFrameKind);
    CHECK(e.offset() == 0);
  }
}

TEST_CASE("interleaved output frames arrive in stream order") {
  VectorSink sink;
  write_frame(OutputFrame{Channel::Out, "a"}, sink);
  write_frame(OutputFrame{Channel::Err, "b"}, sink);
  write_frame(ResultFrame{TypedArray::scalar(2.0)}, sink);
  SpanSource src(sink.bytes(), 1);
  WireReader r(src);
  std::vector<Frame> frames;
  while (auto f = try_read_frame(r)) frames.push_back(*f);
  REQUIRE(frames.size() == 3);
  CHECK(std::get<OutputFrame>(frames[0]) == OutputFrame{Channel::Out, "a"});
  CHECK(std::get<OutputFrame>(frames[1]) == OutputFrame{Channel::Err, "b"});
  CHECK(std::holds_alternative<ResultFrame>(frames[2]));
}

TEST_CASE("decode errors carry their kind") {
  SUBCASE("unknown tag") { CHECK(decode_error({0x08}) == DecodeErrorKind::UnknownTag); }
  SUBCASE("unknown element type") { CHECK(decode_error({0x01, 0x0C, 0, 0}) == DecodeErrorKind::UnknownElemType); }
  SUBCASE("unknown flag bits") { CHECK(decode_error({0x01, 0x01, 0x02, 0}) == DecodeErrorKind::UnknownFlags); }
  SUBCASE("dims product above 2^31") {
    // Two dims of 2^16 each.
    Bytes b = {0x01, 0x07, 0x00, 0x02, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0};
    CHECK(decode_error(b) == DecodeErrorKind::DimsOverflow);
  }
  SUBCASE("negative dim") {
    Bytes b = {0x01, 0x01, 0x00, 0x01, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
    CHECK(decode_error(b) == DecodeErrorKind::NegativeDim);
  }
  SUBCASE("invalid UTF-8") {
    Bytes b = {0x01, 0x09, 0x00, 0x00, 2, 0, 0, 0, 0xC3, 0x28};
    CHECK(decode_error(b) == DecodeErrorKind::InvalidUtf8);
  }
  SUBCASE("boolean byte other than 0 or 1") { CHECK(decode_error({0x01, 0x08, 0, 0, 2}) == DecodeErrorKind::InvalidBool); }
  SUBCASE("nonzero placeholder behind a missing bit") {
    CHECK(decode_error({0x01, 0x07, 0x01, 0x01, 1, 0, 0, 0, 0, 0, 0, 0, 0x01, 0x05}) ==
          DecodeErrorKind::NonzeroPlaceholder);
  }
  SUBCASE("bitmap padding bits") {
    CHECK(decode_error({0x01, 0x07, 0x01, 0x01, 1, 0, 0, 0, 0, 0, 0, 0, 0x02, 0x05}) ==
          DecodeErrorKind::InvalidBitmap);
  }
  SUBCASE("premature end") {
    auto b = scalar_f64_header();
    b.push_back(0);
    CHECK(decode_error(b) == DecodeErrorKind::PrematureEnd);
  }
  SUBCASE("table column with two dims") {
    Bytes b = {0x07, 1, 0, 0, 0, 1, 0, 0, 0, 'x', 0x01, 0x07, 0x00, 0x02};
    for (int i = 0; i < 16; ++i) b.push_back(i % 8 == 0 ? 1 : 0);
    b.push_back(9);
    CHECK(decode_error(b) == DecodeErrorKind::InvalidTable);
  }
  SUBCASE("callback id zero") {
    CHECK(decode_error({0x06, 0x01, 0, 0, 0, 0, 0, 0, 0, 0}) == DecodeErrorKind::ReservedCallbackId);
  }
  SUBCASE("nesting deeper than the cap") {
    Bytes b;
    for (std::size_t i = 0; i <= kMaxDepth; ++i) b.insert(b.end(), {0x02, 1, 0, 0, 0});
    b.push_back(0x00);
    CHECK(decode_error(b) == DecodeErrorKind::TooDeep);
  }
}

TEST_CASE("error offsets point at the offending byte") {
  try {
    decode_from_bytes(Bytes{0x02, 2, 0, 0, 0, 0x00, 0x0A});
    FAIL("accepted");
  } catch (const DecodeError& e) {
    CHECK(e.kind() == DecodeErrorKind::UnknownTag);
    CHECK(e.offset() == 6);
  }
}

TEST_CASE("encoder rejects callback id zero") {
  CHECK_THROWS_AS(encode_to_bytes(FnRef::callback(0)), EncodeError);
}

TEST_CASE("missing and NaN stay distinct through the codec") {
  auto a = TypedArray::vector<double>({1.0, 0.0, std::numeric_limits<double>::quiet_NaN()});
  a.set_missing(1);
  const auto back = decode_from_bytes(encode_to_bytes(a)).as<TypedArray>();
  CHECK(back.is_missing(1));
  CHECK_FALSE(back.is_missing(2));
  CHECK(std::isnan(back.as<double>()[2]));
}

TEST_CASE("generated values round-trip in any chunk size") {
  conformance::ValueGenerator gen({.max_depth = 5, .max_array_length = 64, .seed = 11});
  for (int i = 0; i < 2000; ++i) {
    const Value v = gen.next();
    const auto bytes = encode_to_bytes(v);
    for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{4096}}) {
      const Value back = decode_chunked(bytes, chunk);
      if (!(back == v)) {
        CAPTURE(debug_string(v));
        FAIL("round trip differs");
      }
    }
  }
}

TEST_CASE("no encoding is a strict prefix of another") {
  conformance::ValueGenerator gen({.max_depth = 2, .seed = 5});
  std::vector<Bytes> corpus;
  for (int i = 0; i < 300; ++i) corpus.push_back(encode_to_bytes(gen.next()));
  for (const auto& a : corpus)
    for (const auto& b : corpus)
      if (a.size() < b.size() && std::equal(a.begin(), a.end(), b.begin()))
        FAIL("a shorter encoding prefixes a longer one");
}

TEST_CASE("frames round-trip") {
  const std::vector<Frame> frames = {
      CallFrame{Callee::named("Base.map"), {FnRef::callback(1), TypedArray::vector<double>({1, 2})},
                {{"k", Null{}}}},
      CallFrame{Callee::reference(2), {}, {}},
      CallFrame{Callee::callback(3), {Ref{4, "Main.X"}}, {}},
      ResultFrame{List{{Null{}}}},
      FailFrame{"m", ""},
      ReleaseFrame{9},
      EvalFrame{"1 + 1"},
      LetFrame{"x", {{"x", TypedArray::scalar(1.0)}}},
      FetchFrame{4},
      PutFrame{Table{{{"a", TypedArray::vector<std::int64_t>({1})}}}},
      ScanFrame{"Library", false},
      OutputFrame{Channel::Err, "é"},
      ByeByeFrame{},
  };
  for (const auto& f : frames) {
    const auto bytes = frame_to_bytes(f);
    SpanSource src(bytes, 1);
    CHECK(read_frame(src) == f);
    CHECK(src.exhausted());
  }
}

TEST_CASE("scan flags other than bit 0 are rejected") {
  Bytes b = {0x09, 1, 0, 0, 0, 'L', 0x02};
  SpanSource src(b);
  CHECK_THROWS_AS(read_frame(src), DecodeError);
}

namespace {

struct SocketPair {
  SocketPair() {
    int fds[2];
    REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
    a = std::make_unique<SocketStream>(fds[0]);
    b = std::make_unique<SocketStream>(fds[1]);
  }
  std::unique_ptr<SocketStream> a, b;
};

}  // namespace

TEST_CASE("handshake negotiates equal versions") {
  SocketPair p;
  auto server = std::async(std::launch::async, [&] { return handshake(PeerRole::Server, *p.b, *p.b); });
  CHECK(handshake(PeerRole::Client, *p.a, *p.a) == 1);
  CHECK(server.get() == 1);
}

TEST_CASE("handshake fails on version mismatch") {
  SocketPair p;
  auto server = std::async(std::launch::async, [&] { return handshake(PeerRole::Server, *p.b, *p.b, 1); });
  CHECK_THROWS_AS(handshake(PeerRole::Client, *p.a, *p.a, 2), HandshakeError);
  CHECK_THROWS_AS(server.get(), HandshakeError);
}

TEST_CASE("handshake rejects garbage before any frame") {
  SocketPair p;
  const Bytes garbage = {'G', 'E', 'T', ' ', 0, 0, 0, 0};
  p.a->write(garbage);
  p.a->flush();
  try {
    handshake(PeerRole::Server, *p.b, *p.b);
    FAIL("accepted garbage");
  } catch (const HandshakeError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}
