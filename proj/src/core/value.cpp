#include "bridgewire/value.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "bridgewire/alias.hpp"

namespace bridgewire {

std::string_view elem_type_name(ElemType t) {
  switch (t) {
    case ElemType::F64: return "Float64";
    case ElemType::F32: return "Float32";
    case ElemType::I64: return "Int64";
    case ElemType::I32: return "Int32";
    case ElemType::I16: return "Int16";
    case ElemType::I8: return "Int8";
    case ElemType::U8: return "UInt8";
    case ElemType::Bool: return "Bool";
    case ElemType::String: return "String";
    case ElemType::C128: return "ComplexF64";
    case ElemType::C64: return "ComplexF32";
  }
  return "?";
}

std::size_t elem_width(ElemType t) {
  switch (t) {
    case ElemType::F64: return 8;
    case ElemType::F32: return 4;
    case ElemType::I64: return 8;
    case ElemType::I32: return 4;
    case ElemType::I16: return 2;
    case ElemType::I8: return 1;
    case ElemType::U8: return 1;
    case ElemType::Bool: return 1;
    case ElemType::String: return 0;
    case ElemType::C128: return 16;
    case ElemType::C64: return 8;
  }
  return 0;
}

bool is_valid_elem_type(std::uint8_t code) { return code >= 0x01 && code <= 0x0B; }

std::string_view tag_name(Tag t) {
  switch (t) {
    case Tag::Null: return "NULL";
    case Tag::Array: return "ARRAY";
    case Tag::List: return "LIST";
    case Tag::NamedList: return "NAMEDLIST";
    case Tag::Struct: return "STRUCT";
    case Tag::Ref: return "REF";
    case Tag::FnRef: return "FNREF";
    case Tag::Table: return "TABLE";
  }
  return "?";
}

namespace {

ArrayData make_data(ElemType type, std::size_t n) {
  switch (type) {
    case ElemType::F64: return std::vector<double>(n);
    case ElemType::F32: return std::vector<float>(n);
    case ElemType::I64: return std::vector<std::int64_t>(n);
    case ElemType::I32: return std::vector<std::int32_t>(n);
    case ElemType::I16: return std::vector<std::int16_t>(n);
    case ElemType::I8: return std::vector<std::int8_t>(n);
    case ElemType::U8: return std::vector<std::uint8_t>(n);
    case ElemType::Bool: return std::vector<Bool>(n, Bool::False);
    case ElemType::String: return std::vector<std::string>(n);
    case ElemType::C128: return std::vector<std::complex<double>>(n);
    case ElemType::C64: return std::vector<std::complex<float>>(n);
  }
  throw ValueError("invalid element type");
}

std::size_t product(const std::vector<std::int64_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

template <class T>
bool slot_is_zero(const T& x) {
  if constexpr (std::is_same_v<T, std::string>) {
    return x.empty();
  } else {
    T zero{};
    return std::memcmp(&x, &zero, sizeof(T)) == 0;
  }
}

}  // namespace

TypedArray TypedArray::zeros(ElemType type, std::vector<std::int64_t> dims) {
  TypedArray a;
  for (auto d : dims)
    if (d < 0) throw ValueError("negative dimension");
  a.data_ = make_data(type, product(dims));
  a.dims_ = std::move(dims);
  return a;
}

TypedArray TypedArray::all_missing(ElemType type, std::vector<std::int64_t> dims) {
  TypedArray a = zeros(type, std::move(dims));
  a.ensure_bitmap();
  auto& bm = *a.missing_;
  for (std::size_t i = 0; i < a.size(); ++i) bm[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return a;
}

std::size_t TypedArray::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

bool TypedArray::any_missing() const {
  if (!missing_) return false;
  return std::any_of(missing_->begin(), missing_->end(), [](std::uint8_t b) { return b != 0; });
}

void TypedArray::ensure_bitmap() {
  if (!missing_) missing_.emplace((size() + 7) / 8, 0);
}

void TypedArray::set_missing(std::size_t i) {
  if (i >= size()) throw ValueError("missing index out of range");
  ensure_bitmap();
  (*missing_)[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  std::visit([i](auto& v) { v[i] = {}; }, data_);
}

void TypedArray::set_bitmap(std::vector<std::uint8_t> bitmap) {
  const auto n = size();
  if (bitmap.size() != (n + 7) / 8) throw ValueError("missing bitmap has wrong length");
  if (n % 8 != 0 && !bitmap.empty() &&
      (bitmap.back() >> (n % 8)) != 0)
    throw ValueError("missing bitmap has nonzero padding bits");
  missing_ = std::move(bitmap);
}

void TypedArray::reshape(std::vector<std::int64_t> dims) {
  for (auto d : dims)
    if (d < 0) throw ValueError("negative dimension");
  if (product(dims) != size()) throw ValueError("reshape changes element count");
  dims_ = std::move(dims);
}

void TypedArray::check_shape() const {
  for (auto d : dims_)
    if (d < 0) throw ValueError("negative dimension");
  if (product(dims_) != size())
    throw ValueError(fmt::format("array has {} elements but dims imply {}", size(), product(dims_)));
}

void TypedArray::validate() const {
  check_shape();
  if (!missing_) return;
  const auto n = size();
  if (missing_->size() != (n + 7) / 8) throw ValueError("missing bitmap has wrong length");
  if (n % 8 != 0 && !missing_->empty() && (missing_->back() >> (n % 8)) != 0)
    throw ValueError("missing bitmap has nonzero padding bits");
  std::visit(
      [this, n](const auto& v) {
        for (std::size_t i = 0; i < n; ++i)
          if (is_missing(i) && !slot_is_zero(v[i]))
            throw ValueError(fmt::format("missing element {} has a nonzero placeholder", i));
      },
      data_);
  if (const auto* b = std::get_if<std::vector<Bool>>(&data_)) {
    for (auto x : *b)
      if (x != Bool::False && x != Bool::True) throw ValueError("boolean element is not 0 or 1");
  }
}

bool operator==(const TypedArray& a, const TypedArray& b) {
  if (a.data_.index() != b.data_.index() || a.dims_ != b.dims_ || a.missing_ != b.missing_)
    return false;
  return std::visit(
      [&b](const auto& av) {
        using V = std::decay_t<decltype(av)>;
        const auto& bv = std::get<V>(b.data_);
        if (av.size() != bv.size()) return false;
        if constexpr (std::is_same_v<V, std::vector<std::string>>) {
          return av == bv;
        } else {
          // Bitwise so NaN payloads and signed zeros compare exactly.
          return av.empty() ||
                 std::memcmp(av.data(), bv.data(), av.size() * sizeof(typename V::value_type)) == 0;
        }
      },
      a.data_);
}

std::size_t Table::rows() const { return columns.empty() ? 0 : columns.front().data.size(); }

bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }

namespace {

// Consumes one qualified name with optional parameters starting at `pos`.
bool scan_type_name(std::string_view s, std::size_t& pos, int depth) {
  if (depth > 16) return false;
  while (true) {
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] != '.' && s[pos] != '{' && s[pos] != '}' && s[pos] != ',') ++pos;
    if (!is_identifier(s.substr(start, pos - start))) return false;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      continue;
    }
    break;
  }
  if (pos == s.size() || s[pos] != '{') return true;
  ++pos;
  while (true) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos < s.size() && (s[pos] >= '0' && s[pos] <= '9')) {
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    } else if (!scan_type_name(s, pos, depth + 1)) {
      return false;
    }
    if (pos < s.size() && s[pos] == ',') {
      ++pos;
      continue;
    }
    if (pos < s.size() && s[pos] == '}') {
      ++pos;
      return true;
    }
    return false;
  }
}

}  // namespace

bool is_qualified_name(std::string_view s) {
  std::size_t pos = 0;
  return scan_type_name(s, pos, 0) && pos == s.size();
}

namespace {

void validate_at(const Value& v, std::string& path);

void validate_fields(const std::vector<Field>& fields, std::string& path, bool require_nonempty,
                     std::string_view what) {
  std::unordered_set<std::string_view> seen;
  for (const auto& f : fields) {
    if (require_nonempty && f.name.empty())
      throw ValueError(fmt::format("{}: empty {} name", path, what));
    if (!seen.insert(f.name).second)
      throw ValueError(fmt::format("{}: duplicate {} name '{}'", path, what, f.name));
    auto len = path.size();
    path += '.';
    path += f.name;
    validate_at(f.value, path);
    path.resize(len);
  }
}

void validate_at(const Value& v, std::string& path) {
  std::visit(
      [&path](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, TypedArray>) {
          try {
            x.validate();
          } catch (const ValueError& e) {
            throw ValueError(fmt::format("{}: {}", path, e.what()));
          }
        } else if constexpr (std::is_same_v<T, List>) {
          for (std::size_t i = 0; i < x.items.size(); ++i) {
            auto len = path.size();
            path += fmt::format("[{}]", i);
            validate_at(x.items[i], path);
            path.resize(len);
          }
        } else if constexpr (std::is_same_v<T, NamedList>) {
          validate_fields(x.entries, path, false, "entry");
        } else if constexpr (std::is_same_v<T, Struct>) {
          if (!is_qualified_name(x.type_name))
            throw ValueError(fmt::format("{}: struct type name '{}' is not a qualified identifier",
                                         path, x.type_name));
          validate_fields(x.fields, path, true, "field");
        } else if constexpr (std::is_same_v<T, FnRef>) {
          if (x.kind == FnKind::Callback && x.callback_id == 0)
            throw ValueError(fmt::format("{}: callback id 0 is reserved", path));
        } else if constexpr (std::is_same_v<T, Table>) {
          std::unordered_set<std::string_view> seen;
          for (const auto& c : x.columns) {
            if (c.data.ndims() > 1)
              throw ValueError(fmt::format("{}: column '{}' has {} dims", path, c.name, c.data.ndims()));
            if (c.data.size() != x.rows())
              throw ValueError(fmt::format("{}: column '{}' length differs", path, c.name));
            if (!seen.insert(c.name).second)
              throw ValueError(fmt::format("{}: duplicate column '{}'", path, c.name));
            c.data.validate();
          }
        }
      },
      v.variant());
}

std::string array_string(const TypedArray& a) {
  std::string out;
  auto n = a.size();
  bool vec = !a.is_scalar();
  if (vec) out += '[';
  std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        for (std::size_t i = 0; i < n; ++i) {
          if (i) out += ", ";
          if (i >= 20) {
            out += fmt::format("... ({} total)", n);
            break;
          }
          if (a.is_missing(i)) {
            out += "missing";
          } else if constexpr (std::is_same_v<T, std::string>) {
            out += fmt::format("\"{}\"", v[i]);
          } else if constexpr (std::is_same_v<T, Bool>) {
            out += from_bool(v[i]) ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::complex<double>> ||
                               std::is_same_v<T, std::complex<float>>) {
            out += fmt::format("{}{:+}im", v[i].real(), v[i].imag());
          } else if constexpr (std::is_same_v<T, std::int8_t> || std::is_same_v<T, std::uint8_t>) {
            out += fmt::format("{}", static_cast<int>(v[i]));
          } else {
            out += fmt::format("{}", v[i]);
          }
        }
      },
      a.data());
  if (vec) out += ']';
  return out;
}

}  // namespace

void validate(const Value& v) {
  std::string path = "$";
  validate_at(v, path);
}

std::string debug_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          return "null";
        } else if constexpr (std::is_same_v<T, TypedArray>) {
          return array_string(x);
        } else if constexpr (std::is_same_v<T, List>) {
          std::string s = "(";
          for (std::size_t i = 0; i < x.items.size(); ++i) {
            if (i) s += ", ";
            s += debug_string(x.items[i]);
          }
          return s + ")";
        } else if constexpr (std::is_same_v<T, NamedList> || std::is_same_v<T, Struct>) {
          std::string s;
          const std::vector<Field>* fields;
          if constexpr (std::is_same_v<T, Struct>) {
            s = x.type_name;
            fields = &x.fields;
          } else {
            fields = &x.entries;
          }
          s += "(";
          for (std::size_t i = 0; i < fields->size(); ++i) {
            if (i) s += ", ";
            s += (*fields)[i].name + " = " + debug_string((*fields)[i].value);
          }
          return s + ")";
        } else if constexpr (std::is_same_v<T, Ref>) {
          return fmt::format("<ref #{} {}>", x.id, x.type_name);
        } else if constexpr (std::is_same_v<T, FnRef>) {
          if (x.kind == FnKind::Callback) return fmt::format("<callback #{}>", x.callback_id);
          return fmt::format("<function {}>", x.name);
        } else {
          std::string s = "Table(";
          for (std::size_t i = 0; i < x.columns.size(); ++i) {
            if (i) s += ", ";
            s += x.columns[i].name + " = " + array_string(x.columns[i].data);
          }
          return s + ")";
        }
      },
      v.variant());
}

}  // namespace bridgewire
