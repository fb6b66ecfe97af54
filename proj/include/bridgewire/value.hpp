#pragma once

/// @file value.hpp
/// @brief The universal tagged value exchanged between client and runtime.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bridgewire {

/// Element type codes of a typed array, as they appear on the wire.
enum class ElemType : std::uint8_t {
  F64 = 0x01,
  F32 = 0x02,
  I64 = 0x03,
  I32 = 0x04,
  I16 = 0x05,
  I8 = 0x06,
  U8 = 0x07,
  Bool = 0x08,
  String = 0x09,
  C128 = 0x0A,
  C64 = 0x0B,
};

/// One-byte boolean element; only 0 and 1 are valid.
enum class Bool : std::uint8_t { False = 0, True = 1 };

inline constexpr Bool to_bool(bool b) { return b ? Bool::True : Bool::False; }
inline constexpr bool from_bool(Bool b) { return b == Bool::True; }

// Alternative index + 1 == ElemType code.
using ArrayData =
    std::variant<std::vector<double>, std::vector<float>, std::vector<std::int64_t>,
                 std::vector<std::int32_t>, std::vector<std::int16_t>, std::vector<std::int8_t>,
                 std::vector<std::uint8_t>, std::vector<Bool>, std::vector<std::string>,
                 std::vector<std::complex<double>>, std::vector<std::complex<float>>>;

std::string_view elem_type_name(ElemType t);
/// Fixed element width in bytes, 0 for strings.
std::size_t elem_width(ElemType t);
bool is_valid_elem_type(std::uint8_t code);

/// Raised when a value violates the structural invariants of the model.
class ValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An n-dimensional column-major array of one element type with an optional
/// missing bitmap (bit i of byte i/8, least significant bit first).
class TypedArray {
 public:
  TypedArray() : data_(std::vector<double>{}), dims_{0} {}

  template <class T>
  TypedArray(std::vector<T> data, std::vector<std::int64_t> dims)
      : data_(std::move(data)), dims_(std::move(dims)) {
    check_shape();
  }

  template <class T>
  static TypedArray vector(std::vector<T> data) {
    auto n = static_cast<std::int64_t>(data.size());
    return TypedArray(std::move(data), {n});
  }

  template <class T>
  static TypedArray scalar(T x) {
    return TypedArray(std::vector<T>{std::move(x)}, {});
  }

  /// An array of `count` zero placeholders, all marked missing.
  static TypedArray all_missing(ElemType type, std::vector<std::int64_t> dims);

  /// Zero-filled array of the given type and shape.
  static TypedArray zeros(ElemType type, std::vector<std::int64_t> dims);

  ElemType type() const { return static_cast<ElemType>(data_.index() + 1); }
  const std::vector<std::int64_t>& dims() const { return dims_; }
  std::size_t ndims() const { return dims_.size(); }
  std::size_t size() const;
  bool is_scalar() const { return dims_.empty(); }

  const ArrayData& data() const { return data_; }
  ArrayData& data() { return data_; }

  template <class T>
  const std::vector<T>& as() const {
    return std::get<std::vector<T>>(data_);
  }
  template <class T>
  std::vector<T>& as() {
    return std::get<std::vector<T>>(data_);
  }

  bool has_missing_bitmap() const { return missing_.has_value(); }
  const std::optional<std::vector<std::uint8_t>>& missing_bitmap() const { return missing_; }
  bool is_missing(std::size_t i) const {
    return missing_ && (((*missing_)[i / 8] >> (i % 8)) & 1u) != 0;
  }
  bool any_missing() const;

  /// Marks element i missing and zeroes its placeholder slot.
  void set_missing(std::size_t i);
  /// Attaches an all-clear bitmap if none is present.
  void ensure_bitmap();
  /// Installs a raw bitmap; throws ValueError if its size or padding bits are wrong.
  void set_bitmap(std::vector<std::uint8_t> bitmap);
  void drop_bitmap() { missing_.reset(); }

  void reshape(std::vector<std::int64_t> dims);

  /// Checks every invariant: shape product, bitmap length, zero padding bits,
  /// zeroed placeholders behind missing bits.
  void validate() const;

  friend bool operator==(const TypedArray& a, const TypedArray& b);

 private:
  void check_shape() const;

  ArrayData data_;
  std::vector<std::int64_t> dims_;
  std::optional<std::vector<std::uint8_t>> missing_;
};

class Value;
struct Field;

struct Null {
  friend bool operator==(const Null&, const Null&) { return true; }
};

struct List {
  std::vector<Value> items;
};

struct NamedList {
  std::vector<Field> entries;
};

struct Struct {
  std::string type_name;
  std::vector<Field> fields;
};

struct Ref {
  std::uint64_t id = 0;
  std::string type_name;
  friend bool operator==(const Ref&, const Ref&) = default;
};

enum class FnKind : std::uint8_t { Named = 0x00, Callback = 0x01, TypeConstructor = 0x02 };

struct FnRef {
  FnKind kind = FnKind::Named;
  std::string name;              // Named, TypeConstructor
  std::uint64_t callback_id = 0;  // Callback

  static FnRef named(std::string n) { return {FnKind::Named, std::move(n), 0}; }
  static FnRef callback(std::uint64_t id) { return {FnKind::Callback, {}, id}; }
  static FnRef type_constructor(std::string n) {
    return {FnKind::TypeConstructor, std::move(n), 0};
  }
  friend bool operator==(const FnRef&, const FnRef&) = default;
};

struct Column {
  std::string name;
  TypedArray data;
  friend bool operator==(const Column&, const Column&) = default;
};

struct Table {
  std::vector<Column> columns;
  std::size_t rows() const;
  friend bool operator==(const Table&, const Table&) = default;
};

enum class Tag : std::uint8_t {
  Null = 0x00,
  Array = 0x01,
  List = 0x02,
  NamedList = 0x03,
  Struct = 0x04,
  Ref = 0x05,
  FnRef = 0x06,
  Table = 0x07,
};

std::string_view tag_name(Tag t);

/// Immutable-by-convention tagged value; the unit of everything on the wire.
class Value {
 public:
  using Variant = std::variant<Null, TypedArray, List, NamedList, Struct, Ref, FnRef, Table>;

  Value() : v_(Null{}) {}
  Value(Null n) : v_(n) {}
  Value(TypedArray a) : v_(std::move(a)) {}
  Value(List l) : v_(std::move(l)) {}
  Value(NamedList l) : v_(std::move(l)) {}
  Value(Struct s) : v_(std::move(s)) {}
  Value(Ref r) : v_(std::move(r)) {}
  Value(FnRef f) : v_(std::move(f)) {}
  Value(Table t) : v_(std::move(t)) {}

  Tag tag() const { return static_cast<Tag>(v_.index()); }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(v_);
  }
  template <class T>
  T& as() {
    return std::get<T>(v_);
  }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  const Variant& variant() const { return v_; }

  friend bool operator==(const Value& a, const Value& b);

 private:
  Variant v_;
};

struct Field {
  std::string name;
  Value value;
  friend bool operator==(const Field&, const Field&) = default;
};

inline bool operator==(const List& a, const List& b) { return a.items == b.items; }
inline bool operator==(const NamedList& a, const NamedList& b) { return a.entries == b.entries; }
inline bool operator==(const Struct& a, const Struct& b) {
  return a.type_name == b.type_name && a.fields == b.fields;
}

/// Validates the whole value tree: array invariants, unique NamedList names,
/// unique non-empty struct fields with a qualified type name, table shape,
/// and the reserved zero callback id.
void validate(const Value& v);

/// Dot-separated identifiers, optionally ending in a parameter list of
/// qualified names or integers: "Main.Book", "Complex{Int64}", "A.B{C, 3}".
bool is_qualified_name(std::string_view s);

/// Short human-readable rendering used in diagnostics and the REPL.
std::string debug_string(const Value& v);

}  // namespace bridgewire
