#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <unordered_set>

#include "bridgewire/alias.hpp"
#include "bridgewire/wire.hpp"

namespace bridgewire {

std::string_view decode_error_kind_name(DecodeErrorKind k) {
  switch (k) {
    case DecodeErrorKind::PrematureEnd: return "premature end of stream";
    case DecodeErrorKind::UnknownTag: return "unknown value tag";
    case DecodeErrorKind::UnknownElemType: return "unknown element type";
    case DecodeErrorKind::UnknownFrameKind: return "unknown frame kind";
    case DecodeErrorKind::UnknownCalleeKind: return "unknown callee kind";
    case DecodeErrorKind::UnknownFnKind: return "unknown function reference kind";
    case DecodeErrorKind::UnknownFlags: return "unknown array flags";
    case DecodeErrorKind::DimsOverflow: return "dims product overflow";
    case DecodeErrorKind::NegativeDim: return "negative dimension";
    case DecodeErrorKind::InvalidUtf8: return "invalid UTF-8";
    case DecodeErrorKind::InvalidBool: return "invalid boolean";
    case DecodeErrorKind::InvalidBitmap: return "invalid missing bitmap";
    case DecodeErrorKind::NonzeroPlaceholder: return "nonzero missing placeholder";
    case DecodeErrorKind::InvalidTable: return "invalid table";
    case DecodeErrorKind::InvalidStruct: return "invalid struct";
    case DecodeErrorKind::DuplicateName: return "duplicate name";
    case DecodeErrorKind::ReservedCallbackId: return "reserved callback id";
    case DecodeErrorKind::TooDeep: return "nesting too deep";
  }
  return "decode error";
}

DecodeError::DecodeError(DecodeErrorKind kind, std::uint64_t offset, const std::string& what)
    : std::runtime_error(
          fmt::format("{} at byte {}{}{}", decode_error_kind_name(kind), offset,
                      what.empty() ? "" : ": ", what)),
      kind_(kind),
      offset_(offset) {}

namespace {

constexpr bool kLittle = std::endian::native == std::endian::little;
constexpr std::size_t kChunkBytes = 4u << 20;

template <class T>
T byteswap_int(T v) {
  auto u = static_cast<std::make_unsigned_t<T>>(v);
  std::make_unsigned_t<T> r = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    r = static_cast<decltype(r)>((r << 8) | (u & 0xFF));
    u = static_cast<decltype(u)>(u >> 8);
  }
  return static_cast<T>(r);
}

// Swaps every scalar component of a fixed-width element in place.
template <class T>
void swap_components(T* data, std::size_t n) {
  if constexpr (sizeof(T) == 1) {
    return;
  } else {
    auto* bytes = reinterpret_cast<std::uint8_t*>(data);
    constexpr std::size_t comp = std::is_same_v<T, std::complex<double>>  ? 8
                                 : std::is_same_v<T, std::complex<float>> ? 4
                                                                          : sizeof(T);
    for (std::size_t i = 0; i < n * sizeof(T); i += comp) std::reverse(bytes + i, bytes + i + comp);
  }
}

}  // namespace

// --- primitives -------------------------------------------------------------

void WireReader::read_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    auto n = src_.read_some(out.subspan(got));
    if (n == 0)
      throw DecodeError(DecodeErrorKind::PrematureEnd, offset_ + got,
                        fmt::format("needed {} more bytes", out.size() - got));
    got += n;
  }
  offset_ += got;
}

bool WireReader::try_read_byte(std::uint8_t& b) {
  if (src_.read_some({&b, 1}) == 0) return false;
  ++offset_;
  return true;
}

std::uint8_t WireReader::u8() {
  std::uint8_t b;
  read_exact({&b, 1});
  return b;
}

std::uint32_t WireReader::u32() {
  std::uint8_t b[4];
  read_exact(b);
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
         std::uint32_t{b[3]} << 24;
}

std::uint64_t WireReader::u64() {
  std::uint8_t b[8];
  read_exact(b);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::int64_t WireReader::i64() { return static_cast<std::int64_t>(u64()); }

std::string WireReader::str() {
  const auto start = offset_;
  const std::uint32_t len = u32();
  std::string s;
  // Grow with the data actually received so a bogus length cannot force a
  // huge allocation.
  s.reserve(std::min<std::size_t>(len, kChunkBytes));
  std::size_t done = 0;
  while (done < len) {
    std::size_t k = std::min<std::size_t>(kChunkBytes, len - done);
    s.resize(done + k);
    read_exact({reinterpret_cast<std::uint8_t*>(s.data()) + done, k});
    done += k;
  }
  if (auto bad = find_invalid_utf8(s))
    throw DecodeError(DecodeErrorKind::InvalidUtf8, start + 4 + *bad, "string");
  return s;
}

void WireWriter::u32(std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                       static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  bytes(b);
}

void WireWriter::u64(std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  bytes(b);
}

void WireWriter::str(std::string_view s) {
  if (s.size() > UINT32_MAX) throw EncodeError("string longer than 4 GiB");
  if (auto bad = find_invalid_utf8(s))
    throw EncodeError(fmt::format("string is not valid UTF-8 (byte {})", *bad));
  u32(static_cast<std::uint32_t>(s.size()));
  bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

// --- values -----------------------------------------------------------------

namespace {

void encode_array(const TypedArray& a, WireWriter& w) {
  w.u8(static_cast<std::uint8_t>(Tag::Array));
  w.u8(static_cast<std::uint8_t>(a.type()));
  w.u8(a.has_missing_bitmap() ? 0x01 : 0x00);
  if (a.ndims() > 255) throw EncodeError("array has more than 255 dimensions");
  w.u8(static_cast<std::uint8_t>(a.ndims()));
  for (auto d : a.dims()) w.i64(d);
  if (const auto& bm = a.missing_bitmap()) w.bytes(*bm);
  std::visit(
      [&w](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, std::string>) {
          for (const auto& s : v) w.str(s);
        } else if constexpr (kLittle || sizeof(T) == 1) {
          w.bytes({reinterpret_cast<const std::uint8_t*>(v.data()), v.size() * sizeof(T)});
        } else {
          std::vector<T> tmp(v);
          swap_components(tmp.data(), tmp.size());
          w.bytes({reinterpret_cast<const std::uint8_t*>(tmp.data()), tmp.size() * sizeof(T)});
        }
      },
      a.data());
}

void encode_fields(const std::vector<Field>& fields, WireWriter& w) {
  if (fields.size() > UINT32_MAX) throw EncodeError("too many entries");
  w.u32(static_cast<std::uint32_t>(fields.size()));
  for (const auto& f : fields) {
    w.str(f.name);
    encode_value(f.value, w);
  }
}

}  // namespace

void encode_value(const Value& v, WireWriter& w) {
  std::visit(
      [&w](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          w.u8(static_cast<std::uint8_t>(Tag::Null));
        } else if constexpr (std::is_same_v<T, TypedArray>) {
          encode_array(x, w);
        } else if constexpr (std::is_same_v<T, List>) {
          w.u8(static_cast<std::uint8_t>(Tag::List));
          if (x.items.size() > UINT32_MAX) throw EncodeError("list too long");
          w.u32(static_cast<std::uint32_t>(x.items.size()));
          for (const auto& item : x.items) encode_value(item, w);
        } else if constexpr (std::is_same_v<T, NamedList>) {
          w.u8(static_cast<std::uint8_t>(Tag::NamedList));
          encode_fields(x.entries, w);
        } else if constexpr (std::is_same_v<T, Struct>) {
          w.u8(static_cast<std::uint8_t>(Tag::Struct));
          w.str(x.type_name);
          encode_fields(x.fields, w);
        } else if constexpr (std::is_same_v<T, Ref>) {
          w.u8(static_cast<std::uint8_t>(Tag::Ref));
          w.u64(x.id);
          w.str(x.type_name);
        } else if constexpr (std::is_same_v<T, FnRef>) {
          w.u8(static_cast<std::uint8_t>(Tag::FnRef));
          w.u8(static_cast<std::uint8_t>(x.kind));
          if (x.kind == FnKind::Callback) {
            if (x.callback_id == 0) throw EncodeError("callback id 0 is reserved");
            w.u64(x.callback_id);
          } else {
            w.str(x.name);
          }
        } else if constexpr (std::is_same_v<T, Table>) {
          w.u8(static_cast<std::uint8_t>(Tag::Table));
          w.u32(static_cast<std::uint32_t>(x.columns.size()));
          for (const auto& c : x.columns) {
            if (c.data.ndims() > 1) throw EncodeError("table column has more than one dimension");
            w.str(c.name);
            encode_array(c.data, w);
          }
        }
      },
      v.variant());
}

std::size_t encode_value(const Value& v, ByteSink& sink) {
  WireWriter w(sink);
  encode_value(v, w);
  return w.count();
}

std::vector<std::uint8_t> encode_to_bytes(const Value& v) {
  VectorSink sink;
  encode_value(v, sink);
  return sink.take();
}

namespace {

template <class T>
void read_fixed(WireReader& r, std::vector<T>& out, std::size_t n) {
  constexpr std::size_t chunk = std::max<std::size_t>(1, kChunkBytes / sizeof(T));
  out.reserve(std::min(n, chunk));
  while (out.size() < n) {
    const std::size_t old = out.size();
    const std::size_t k = std::min(chunk, n - old);
    out.resize(old + k);
    r.read_exact({reinterpret_cast<std::uint8_t*>(out.data() + old), k * sizeof(T)});
  }
  if constexpr (!kLittle) swap_components(out.data(), out.size());
}

TypedArray decode_array(WireReader& r, std::uint64_t start) {
  const auto type_off = r.offset();
  const std::uint8_t code = r.u8();
  if (!is_valid_elem_type(code))
    throw DecodeError(DecodeErrorKind::UnknownElemType, type_off, fmt::format("0x{:02x}", code));
  const auto type = static_cast<ElemType>(code);
  const auto flags_off = r.offset();
  const std::uint8_t flags = r.u8();
  if (flags & ~0x01u)
    throw DecodeError(DecodeErrorKind::UnknownFlags, flags_off, fmt::format("0x{:02x}", flags));
  const std::uint8_t ndims = r.u8();
  std::vector<std::int64_t> dims(ndims);
  std::uint64_t count = 1;
  for (auto& d : dims) {
    const auto off = r.offset();
    d = r.i64();
    if (d < 0) throw DecodeError(DecodeErrorKind::NegativeDim, off, std::to_string(d));
    if (d != 0 && count > kMaxElements / static_cast<std::uint64_t>(d))
      throw DecodeError(DecodeErrorKind::DimsOverflow, off, "element count exceeds 2^31");
    count *= static_cast<std::uint64_t>(d);
  }
  if (count > kMaxElements)
    throw DecodeError(DecodeErrorKind::DimsOverflow, start, "element count exceeds 2^31");
  const std::size_t n = static_cast<std::size_t>(count);

  std::optional<std::vector<std::uint8_t>> bitmap;
  const auto bitmap_off = r.offset();
  if (flags & 0x01) {
    bitmap.emplace();
    read_fixed(r, *bitmap, (n + 7) / 8);
    if (n % 8 != 0 && !bitmap->empty() && (bitmap->back() >> (n % 8)) != 0)
      throw DecodeError(DecodeErrorKind::InvalidBitmap, r.offset() - 1, "padding bits set");
  }
  auto missing = [&bitmap](std::size_t i) {
    return bitmap && (((*bitmap)[i / 8] >> (i % 8)) & 1u) != 0;
  };

  const auto payload_off = r.offset();
  ArrayData data;
  auto fill = [&]<class T>(std::vector<T> v) {
    if constexpr (std::is_same_v<T, std::string>) {
      v.reserve(std::min<std::size_t>(n, 1 << 16));
      for (std::size_t i = 0; i < n; ++i) {
        const auto off = r.offset();
        v.push_back(r.str());
        if (missing(i) && !v.back().empty())
          throw DecodeError(DecodeErrorKind::NonzeroPlaceholder, off, fmt::format("element {}", i));
      }
    } else {
      read_fixed(r, v, n);
      if constexpr (std::is_same_v<T, Bool>) {
        for (std::size_t i = 0; i < n; ++i)
          if (v[i] != Bool::False && v[i] != Bool::True)
            throw DecodeError(DecodeErrorKind::InvalidBool, payload_off + i,
                              fmt::format("byte 0x{:02x}", static_cast<unsigned>(v[i])));
      }
      if (bitmap) {
        const T zero{};
        for (std::size_t i = 0; i < n; ++i)
          if (missing(i) && std::memcmp(&v[i], &zero, sizeof(T)) != 0)
            throw DecodeError(DecodeErrorKind::NonzeroPlaceholder, payload_off + i * sizeof(T),
                              fmt::format("element {}", i));
      }
    }
    data = std::move(v);
  };
  switch (type) {
    case ElemType::F64: fill(std::vector<double>{}); break;
    case ElemType::F32: fill(std::vector<float>{}); break;
    case ElemType::I64: fill(std::vector<std::int64_t>{}); break;
    case ElemType::I32: fill(std::vector<std::int32_t>{}); break;
    case ElemType::I16: fill(std::vector<std::int16_t>{}); break;
    case ElemType::I8: fill(std::vector<std::int8_t>{}); break;
    case ElemType::U8: fill(std::vector<std::uint8_t>{}); break;
    case ElemType::Bool: fill(std::vector<Bool>{}); break;
    case ElemType::String: fill(std::vector<std::string>{}); break;
    case ElemType::C128: fill(std::vector<std::complex<double>>{}); break;
    case ElemType::C64: fill(std::vector<std::complex<float>>{}); break;
  }
  (void)bitmap_off;
  TypedArray a = std::visit([&](auto& v) { return TypedArray(std::move(v), std::move(dims)); }, data);
  if (bitmap) a.set_bitmap(std::move(*bitmap));
  return a;
}

Value decode_at(WireReader& r, std::size_t depth);

std::vector<Field> decode_fields(WireReader& r, std::size_t depth, bool struct_fields) {
  const std::uint32_t n = r.u32();
  std::vector<Field> fields;
  fields.reserve(std::min<std::uint32_t>(n, 1024));
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto off = r.offset();
    std::string name = r.str();
    if (struct_fields && name.empty())
      throw DecodeError(DecodeErrorKind::InvalidStruct, off, "empty field name");
    if (!seen.insert(name).second)
      throw DecodeError(DecodeErrorKind::DuplicateName, off, fmt::format("'{}'", name));
    Value v = decode_at(r, depth + 1);
    fields.push_back({std::move(name), std::move(v)});
  }
  return fields;
}

Value decode_at(WireReader& r, std::size_t depth) {
  const auto start = r.offset();
  if (depth > kMaxDepth) throw DecodeError(DecodeErrorKind::TooDeep, start, "");
  const std::uint8_t tag = r.u8();
  switch (static_cast<Tag>(tag)) {
    case Tag::Null:
      return Null{};
    case Tag::Array:
      return decode_array(r, start);
    case Tag::List: {
      const std::uint32_t n = r.u32();
      List l;
      l.items.reserve(std::min<std::uint32_t>(n, 1024));
      for (std::uint32_t i = 0; i < n; ++i) l.items.push_back(decode_at(r, depth + 1));
      return l;
    }
    case Tag::NamedList:
      return NamedList{decode_fields(r, depth, false)};
    case Tag::Struct: {
      const auto off = r.offset();
      std::string type_name = r.str();
      if (!is_qualified_name(type_name))
        throw DecodeError(DecodeErrorKind::InvalidStruct, off,
                          fmt::format("type name '{}' is not a qualified identifier", type_name));
      return Struct{std::move(type_name), decode_fields(r, depth, true)};
    }
    case Tag::Ref: {
      const std::uint64_t id = r.u64();
      return Ref{id, r.str()};
    }
    case Tag::FnRef: {
      const auto off = r.offset();
      const std::uint8_t kind = r.u8();
      switch (static_cast<FnKind>(kind)) {
        case FnKind::Named: return FnRef::named(r.str());
        case FnKind::TypeConstructor: return FnRef::type_constructor(r.str());
        case FnKind::Callback: {
          const auto id_off = r.offset();
          const std::uint64_t id = r.u64();
          if (id == 0) throw DecodeError(DecodeErrorKind::ReservedCallbackId, id_off, "");
          return FnRef::callback(id);
        }
      }
      throw DecodeError(DecodeErrorKind::UnknownFnKind, off, fmt::format("0x{:02x}", kind));
    }
    case Tag::Table: {
      const std::uint32_t n = r.u32();
      Table t;
      t.columns.reserve(std::min<std::uint32_t>(n, 1024));
      std::unordered_set<std::string> seen;
      for (std::uint32_t i = 0; i < n; ++i) {
        const auto name_off = r.offset();
        std::string name = r.str();
        if (!seen.insert(name).second)
          throw DecodeError(DecodeErrorKind::DuplicateName, name_off, fmt::format("column '{}'", name));
        const auto col_off = r.offset();
        const std::uint8_t col_tag = r.u8();
        if (col_tag != static_cast<std::uint8_t>(Tag::Array))
          throw DecodeError(DecodeErrorKind::InvalidTable, col_off, "column is not an array");
        TypedArray col = decode_array(r, col_off);
        if (col.ndims() > 1)
          throw DecodeError(DecodeErrorKind::InvalidTable, col_off, "column has more than one dimension");
        if (!t.columns.empty() && col.size() != t.rows())
          throw DecodeError(DecodeErrorKind::InvalidTable, col_off, "column lengths differ");
        t.columns.push_back({std::move(name), std::move(col)});
      }
      return t;
    }
  }
  throw DecodeError(DecodeErrorKind::UnknownTag, start, fmt::format("0x{:02x}", tag));
}

}  // namespace

Value decode_value(WireReader& r) { return decode_at(r, 0); }

Value decode_value(ByteSource& src) {
  WireReader r(src);
  return decode_at(r, 0);
}

Value decode_from_bytes(std::span<const std::uint8_t> bytes) {
  SpanSource src(bytes);
  WireReader r(src);
  Value v = decode_at(r, 0);
  if (!src.exhausted())
    throw DecodeError(DecodeErrorKind::UnknownTag, r.offset(), "trailing bytes after value");
  return v;
}

}  // namespace bridgewire
