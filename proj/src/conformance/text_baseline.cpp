#include "bridgewire/conformance/text_baseline.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

namespace bridgewire::conformance {

TextFormatError::TextFormatError(std::size_t offset, const std::string& what)
    : std::runtime_error(fmt::format("text baseline: {} at offset {}", what, offset)), offset_(offset) {}

namespace {

// --- writer ----------------------------------------------------------------

void put_string(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          fmt::format_to(std::back_inserter(out), "\\u{:04x}", static_cast<unsigned>(c));
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

template <class T>
void put_number(std::string& out, T x) {
  if constexpr (std::is_floating_point_v<T>) {
    if (std::isnan(x)) {
      out += "\"NaN\"";
      return;
    }
    if (std::isinf(x)) {
      out += x > 0 ? "\"Inf\"" : "\"-Inf\"";
      return;
    }
  }
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, end);
}

template <class T>
void put_element(std::string& out, const T& x) {
  if constexpr (std::is_same_v<T, Bool>) {
    out += from_bool(x) ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    put_string(out, x);
  } else if constexpr (std::is_arithmetic_v<T>) {
    put_number(out, x);
  } else {
    out += '[';
    put_number(out, x.real());
    out += ',';
    put_number(out, x.imag());
    out += ']';
  }
}

void put_array(std::string& out, const TypedArray& a) {
  out += "{\"t\":\"array\",\"type\":";
  put_string(out, elem_type_name(a.type()));
  out += ",\"dims\":[";
  for (std::size_t i = 0; i < a.ndims(); ++i) {
    if (i) out += ',';
    put_number(out, a.dims()[i]);
  }
  out += ']';
  if (a.has_missing_bitmap()) out += ",\"missing\":true";
  out += ",\"data\":[";
  std::visit(
      [&](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ',';
          if (a.is_missing(i)) {
            out += "null";
          } else {
            put_element(out, v[i]);
          }
        }
      },
      a.data());
  out += "]}";
}

void put_fields(std::string& out, const std::vector<Field>& fields) {
  out += '[';
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += '[';
    put_string(out, fields[i].name);
    out += ',';
    to_text(fields[i].value, out);
    out += ']';
  }
  out += ']';
}

// --- reader ----------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Value value() {
    expect("{\"t\":");
    const std::string tag = string();
    Value v;
    if (tag == "null") {
      v = Null{};
    } else if (tag == "array") {
      v = array_body();
    } else if (tag == "list") {
      expect(",\"items\":[");
      List l;
      if (!consume(']')) {
        do l.items.push_back(value());
        while (consume(','));
        expect("]");
      }
      v = std::move(l);
    } else if (tag == "named") {
      expect(",\"entries\":");
      v = NamedList{fields()};
    } else if (tag == "struct") {
      expect(",\"type\":");
      Struct st;
      st.type_name = string();
      expect(",\"fields\":");
      st.fields = fields();
      v = std::move(st);
    } else if (tag == "table") {
      expect(",\"columns\":[");
      Table t;
      if (!consume(']')) {
        do {
          expect("[");
          Column c;
          c.name = string();
          expect(",{\"t\":\"array\"");
          c.data = array_body();
          expect("}]");
          t.columns.push_back(std::move(c));
        } while (consume(','));
        expect("]");
      }
      v = std::move(t);
    } else {
      fail(fmt::format("unsupported tag '{}'", tag));
    }
    expect("}");
    return v;
  }

  void finish() {
    if (pos_ != s_.size()) fail("trailing characters");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw TextFormatError(pos_, what); }

  bool consume(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) fail(fmt::format("expected '{}'", lit));
    pos_ += lit.size();
  }

  bool peek_literal(std::string_view lit) const { return s_.substr(pos_, lit.size()) == lit; }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::uint32_t hex4() {
    if (pos_ + 4 > s_.size()) fail("truncated \\u escape");
    std::uint32_t cp = 0;
    auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + 4, cp, 16);
    if (ec != std::errc() || p != s_.data() + pos_ + 4) fail("bad \\u escape");
    pos_ += 4;
    return cp;
  }

  std::string string() {
    if (!consume('"')) fail("expected string");
    std::string out;
    while (true) {
      const std::size_t run = s_.find_first_of("\"\\", pos_);
      if (run == std::string_view::npos) fail("unterminated string");
      out.append(s_.substr(pos_, run - pos_));
      pos_ = run + 1;
      if (s_[run] == '"') return out;
      if (pos_ >= s_.size()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case '/': out += '/'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u': {
          std::uint32_t cp = hex4();
          if (cp >= 0xD800 && cp < 0xDC00) {
            expect("\\u");
            const std::uint32_t lo = hex4();
            if (lo < 0xDC00 || lo >= 0xE000) fail("unpaired surrogate");
            cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
          }
          append_utf8(out, cp);
          break;
        }
        default: fail("unknown escape");
      }
    }
  }

  template <class T>
  T number() {
    if constexpr (std::is_floating_point_v<T>) {
      if (consume('"')) {
        T x;
        if (peek_literal("NaN\"")) {
          x = std::numeric_limits<T>::quiet_NaN();
          pos_ += 4;
        } else if (peek_literal("Inf\"")) {
          x = std::numeric_limits<T>::infinity();
          pos_ += 4;
        } else if (peek_literal("-Inf\"")) {
          x = -std::numeric_limits<T>::infinity();
          pos_ += 5;
        } else {
          fail("unknown float token");
        }
        return x;
      }
    }
    T x{};
    auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), x);
    if (ec != std::errc()) fail("bad number");
    pos_ = static_cast<std::size_t>(p - s_.data());
    return x;
  }

  template <class T>
  void element(T& x) {
    if constexpr (std::is_same_v<T, Bool>) {
      if (peek_literal("true")) {
        x = Bool::True;
        pos_ += 4;
      } else if (peek_literal("false")) {
        x = Bool::False;
        pos_ += 5;
      } else {
        fail("expected boolean");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      x = string();
    } else if constexpr (std::is_arithmetic_v<T>) {
      x = number<T>();
    } else {
      using R = typename T::value_type;
      expect("[");
      const R re = number<R>();
      expect(",");
      const R im = number<R>();
      expect("]");
      x = T(re, im);
    }
  }

  // After `{"t":"array"`; leaves the closing brace.
  TypedArray array_body() {
    expect(",\"type\":");
    const std::string type_name = string();
    std::optional<ElemType> type;
    for (std::uint8_t c = 1; c <= 11; ++c)
      if (elem_type_name(static_cast<ElemType>(c)) == type_name) type = static_cast<ElemType>(c);
    if (!type) fail(fmt::format("unknown element type '{}'", type_name));
    expect(",\"dims\":[");
    std::vector<std::int64_t> dims;
    if (!consume(']')) {
      do dims.push_back(number<std::int64_t>());
      while (consume(','));
      expect("]");
    }
    const bool has_bitmap = peek_literal(",\"missing\":true");
    if (has_bitmap) pos_ += 15;
    expect(",\"data\":[");
    TypedArray a;
    try {
      a = TypedArray::zeros(*type, dims);
    } catch (const std::exception& e) {
      fail(e.what());
    }
    if (has_bitmap) a.ensure_bitmap();
    const std::size_t n = a.size();
    std::visit(
        [&](auto& v) {
          for (std::size_t i = 0; i < n; ++i) {
            if (i) expect(",");
            if (peek_literal("null")) {
              if (!has_bitmap) fail("missing element without bitmap");
              pos_ += 4;
              a.set_missing(i);
            } else {
              element(v[i]);
            }
          }
        },
        a.data());
    expect("]");
    return a;
  }

  std::vector<Field> fields() {
    expect("[");
    std::vector<Field> out;
    if (consume(']')) return out;
    do {
      expect("[");
      Field f;
      f.name = string();
      expect(",");
      f.value = value();
      expect("]");
      out.push_back(std::move(f));
    } while (consume(','));
    expect("]");
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

template <class T>
bool within_ulps(T a, T b, std::uint64_t max_ulps) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (a == b) return true;
  if (std::signbit(a) != std::signbit(b)) return false;
  using Bits = std::conditional_t<sizeof(T) == 8, std::int64_t, std::int32_t>;
  const auto ia = std::bit_cast<Bits>(a);
  const auto ib = std::bit_cast<Bits>(b);
  const auto diff = ia > ib ? static_cast<std::uint64_t>(ia - ib) : static_cast<std::uint64_t>(ib - ia);
  return diff <= max_ulps;
}

bool arrays_close(const TypedArray& a, const TypedArray& b, std::uint64_t max_ulps) {
  if (a.type() != b.type() || a.dims() != b.dims() || a.missing_bitmap() != b.missing_bitmap()) return false;
  return std::visit(
      [&](const auto& va) {
        using V = std::decay_t<decltype(va)>;
        using T = typename V::value_type;
        const auto& vb = std::get<V>(b.data());
        for (std::size_t i = 0; i < va.size(); ++i) {
          if constexpr (std::is_floating_point_v<T>) {
            if (!within_ulps(va[i], vb[i], max_ulps)) return false;
          } else if constexpr (std::is_same_v<T, std::complex<double>> || std::is_same_v<T, std::complex<float>>) {
            if (!within_ulps(va[i].real(), vb[i].real(), max_ulps) ||
                !within_ulps(va[i].imag(), vb[i].imag(), max_ulps))
              return false;
          } else {
            if (!(va[i] == vb[i])) return false;
          }
        }
        return true;
      },
      a.data());
}

bool fields_close(const std::vector<Field>& a, const std::vector<Field>& b, std::uint64_t max_ulps) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || !approx_equal(a[i].value, b[i].value, max_ulps)) return false;
  return true;
}

}  // namespace

void to_text(const Value& v, std::string& out) {
  switch (v.tag()) {
    case Tag::Null: out += "{\"t\":\"null\"}"; return;
    case Tag::Array: put_array(out, v.as<TypedArray>()); return;
    case Tag::List: {
      out += "{\"t\":\"list\",\"items\":[";
      const auto& items = v.as<List>().items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        to_text(items[i], out);
      }
      out += "]}";
      return;
    }
    case Tag::NamedList:
      out += "{\"t\":\"named\",\"entries\":";
      put_fields(out, v.as<NamedList>().entries);
      out += '}';
      return;
    case Tag::Struct: {
      const auto& s = v.as<Struct>();
      out += "{\"t\":\"struct\",\"type\":";
      put_string(out, s.type_name);
      out += ",\"fields\":";
      put_fields(out, s.fields);
      out += '}';
      return;
    }
    case Tag::Table: {
      out += "{\"t\":\"table\",\"columns\":[";
      const auto& cols = v.as<Table>().columns;
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += '[';
        put_string(out, cols[i].name);
        out += ',';
        put_array(out, cols[i].data);
        out += ']';
      }
      out += "]}";
      return;
    }
    case Tag::Ref:
    case Tag::FnRef:
      throw TextFormatError(out.size(), fmt::format("unsupported tag {}", tag_name(v.tag())));
  }
}

std::string to_text(const Value& v) {
  std::string out;
  to_text(v, out);
  return out;
}

Value from_text(std::string_view text) {
  Parser p(text);
  Value v = p.value();
  p.finish();
  return v;
}

Value text_roundtrip(const Value& v) { return from_text(to_text(v)); }

bool approx_equal(const Value& a, const Value& b, std::uint64_t max_ulps) {
  if (a.tag() != b.tag()) return false;
  switch (a.tag()) {
    case Tag::Null: return true;
    case Tag::Array: return arrays_close(a.as<TypedArray>(), b.as<TypedArray>(), max_ulps);
    case Tag::List: {
      const auto& x = a.as<List>().items;
      const auto& y = b.as<List>().items;
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!approx_equal(x[i], y[i], max_ulps)) return false;
      return true;
    }
    case Tag::NamedList: return fields_close(a.as<NamedList>().entries, b.as<NamedList>().entries, max_ulps);
    case Tag::Struct:
      return a.as<Struct>().type_name == b.as<Struct>().type_name &&
             fields_close(a.as<Struct>().fields, b.as<Struct>().fields, max_ulps);
    case Tag::Table: {
      const auto& x = a.as<Table>().columns;
      const auto& y = b.as<Table>().columns;
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].name != y[i].name || !arrays_close(x[i].data, y[i].data, max_ulps)) return false;
      return true;
    }
    case Tag::Ref:
    case Tag::FnRef: return a == b;
  }
  return false;
}

}  // namespace bridgewire::conformance
