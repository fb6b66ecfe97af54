#pragma once

/// @file host_value.hpp
/// @brief Host-side data model: the values a client program works with.
///
/// The host model follows a dynamically typed analysis language: there are no
/// scalars, only vectors (a scalar is a vector of length one), integers are
/// 32-bit, every element may be missing, and any value can carry the name of
/// the remote type it came from so it can be sent back unchanged.

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bridgewire/value.hpp"

namespace bridgewire {

/// Spelling for a missing element in the HostVector factories.
inline constexpr std::nullopt_t NA = std::nullopt;

enum class HostType { Integer, Double, Logical, Character, Complex, Raw };

std::string_view host_type_name(HostType t);

class HostVector {
 public:
  // Alternative order matches HostType.
  using Data = std::variant<std::vector<std::int32_t>, std::vector<double>, std::vector<Bool>,
                            std::vector<std::string>, std::vector<std::complex<double>>,
                            std::vector<std::uint8_t>>;

  HostVector() : data_(std::vector<double>{}) {}
  explicit HostVector(Data data) : data_(std::move(data)) {}

  static HostVector integers(std::initializer_list<std::optional<std::int32_t>> xs);
  static HostVector doubles(std::initializer_list<std::optional<double>> xs);
  static HostVector logicals(std::initializer_list<std::optional<bool>> xs);
  static HostVector strings(std::initializer_list<std::optional<std::string>> xs);
  static HostVector complexes(std::initializer_list<std::optional<std::complex<double>>> xs);
  static HostVector raw(std::vector<std::uint8_t> xs) { return HostVector(std::move(xs)); }

  static HostVector of(std::vector<std::int32_t> v) { return HostVector(std::move(v)); }
  static HostVector of(std::vector<double> v) { return HostVector(std::move(v)); }
  static HostVector of(std::vector<std::string> v) { return HostVector(std::move(v)); }

  HostType type() const { return static_cast<HostType>(data_.index()); }
  std::size_t size() const;

  const Data& data() const { return data_; }
  Data& data() { return data_; }
  template <class T>
  const std::vector<T>& as() const {
    return std::get<std::vector<T>>(data_);
  }
  template <class T>
  std::vector<T>& as() {
    return std::get<std::vector<T>>(data_);
  }
  /// Convenience accessors for length-one vectors.
  double as_double(std::size_t i = 0) const;
  std::int32_t as_int(std::size_t i = 0) const;
  const std::string& as_string(std::size_t i = 0) const { return as<std::string>().at(i); }

  bool is_na(std::size_t i) const { return i < na_.size() && na_[i]; }
  bool any_na() const;
  /// Marks element i missing; its stored value becomes the zero placeholder.
  HostVector& set_na(std::size_t i);
  const std::vector<bool>& na_mask() const { return na_; }
  /// True once the vector may hold missing elements, even if none is set
  /// right now; mirrors an array type that admits missing values.
  bool has_na_mask() const { return !na_.empty(); }
  HostVector& ensure_na_mask() {
    na_.resize(size(), false);
    return *this;
  }

  /// Explicit dimensions; absent for a plain vector.
  const std::optional<std::vector<std::int64_t>>& dim() const { return dim_; }
  HostVector& set_dim(std::vector<std::int64_t> d);
  HostVector& clear_dim() {
    dim_.reset();
    return *this;
  }

  /// Remote type name attached when the plain host type loses information.
  const std::optional<std::string>& type_attr() const { return type_attr_; }
  HostVector& set_type_attr(std::optional<std::string> t) {
    type_attr_ = std::move(t);
    return *this;
  }

  friend bool operator==(const HostVector& a, const HostVector& b);

 private:
  Data data_;
  std::vector<bool> na_;
  std::optional<std::vector<std::int64_t>> dim_;
  std::optional<std::string> type_attr_;
};

// --- proxies ----------------------------------------------------------------

/// Ids of dropped proxies waiting to be sent as RELEASE frames. Enqueueing is
/// the only operation that may happen on a foreign thread.
class ReleaseQueue {
 public:
  struct Entry {
    std::uint64_t epoch;
    std::uint64_t id;
  };
  void enqueue(std::uint64_t epoch, std::uint64_t id) {
    std::lock_guard lock(mu_);
    entries_.push_back({epoch, id});
  }
  std::vector<Entry> take() {
    std::lock_guard lock(mu_);
    return std::exchange(entries_, {});
  }
  void put_back(std::vector<Entry> entries) {
    std::lock_guard lock(mu_);
    entries_.insert(entries_.begin(), entries.begin(), entries.end());
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

/// Handle to an object held in the runtime's registry. Copies share one
/// underlying handle; the id is queued for release once, when the last copy
/// goes away.
class Proxy {
 public:
  Proxy(std::uint64_t id, std::string type_name, std::uint64_t epoch,
        std::weak_ptr<ReleaseQueue> queue);

  std::uint64_t id() const { return state_->id; }
  const std::string& type_name() const { return state_->type_name; }
  std::uint64_t epoch() const { return state_->epoch; }
  /// Identity of the underlying handle, shared by copies.
  const void* handle() const { return state_.get(); }

  friend bool operator==(const Proxy& a, const Proxy& b) { return a.state_ == b.state_; }

 private:
  struct State {
    State(std::uint64_t i, std::string t, std::uint64_t e, std::weak_ptr<ReleaseQueue> q)
        : id(i), type_name(std::move(t)), epoch(e), queue(std::move(q)) {}
    State(const State&) = delete;
    State& operator=(const State&) = delete;
    ~State();

    std::uint64_t id;
    std::string type_name;
    std::uint64_t epoch;
    std::weak_ptr<ReleaseQueue> queue;
  };
  std::shared_ptr<const State> state_;
};

// --- composite host values ---------------------------------------------------

class HostValue;
struct HostField;

struct HostNull {
  friend bool operator==(const HostNull&, const HostNull&) { return true; }
};

/// Unnamed heterogeneous list.
struct HostList {
  std::vector<HostValue> items;
};

/// Named list; with a type attribute it stands for a remote struct.
struct HostRecord {
  std::vector<HostField> fields;
  std::optional<std::string> type_attr;

  const HostValue* find(std::string_view name) const;
};

/// Data frame: ordered, equally long, named column vectors.
struct HostTable {
  std::vector<std::pair<std::string, HostVector>> columns;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().second.size(); }
  const HostVector* column(std::string_view name) const;
  friend bool operator==(const HostTable&, const HostTable&) = default;
};

using HostArgs = std::vector<HostValue>;
using HostNamedArgs = std::vector<HostField>;

/// A host function the runtime can call back into.
class HostFunction {
 public:
  using Fn = std::function<HostValue(const HostArgs&, const HostNamedArgs&)>;
  explicit HostFunction(Fn fn) : fn_(std::make_shared<const Fn>(std::move(fn))) {}
  explicit HostFunction(std::shared_ptr<const Fn> fn) : fn_(std::move(fn)) {}
  /// Wraps a callable taking positional arguments only.
  static HostFunction positional(std::function<HostValue(const HostArgs&)> fn);

  HostValue operator()(const HostArgs& args, const HostNamedArgs& named) const;
  const void* identity() const { return fn_.get(); }
  std::weak_ptr<const Fn> weak() const { return fn_; }

  friend bool operator==(const HostFunction& a, const HostFunction& b) { return a.fn_ == b.fn_; }

 private:
  std::shared_ptr<const Fn> fn_;
};

/// A remote function known by name, or a remote type constructor.
struct RemoteFunction {
  FnKind kind = FnKind::Named;
  std::string name;
  friend bool operator==(const RemoteFunction&, const RemoteFunction&) = default;
};

class HostValue {
 public:
  using Variant = std::variant<HostNull, HostVector, HostList, HostRecord, HostTable, HostFunction,
                               RemoteFunction, Proxy>;

  HostValue() : v_(HostNull{}) {}
  HostValue(HostNull n) : v_(n) {}
  HostValue(HostVector v) : v_(std::move(v)) {}
  HostValue(HostList l) : v_(std::move(l)) {}
  HostValue(HostRecord r) : v_(std::move(r)) {}
  HostValue(HostTable t) : v_(std::move(t)) {}
  HostValue(HostFunction f) : v_(std::move(f)) {}
  HostValue(RemoteFunction f) : v_(std::move(f)) {}
  HostValue(Proxy p) : v_(std::move(p)) {}

  // Length-one vectors from native scalars.
  HostValue(double x) : v_(HostVector(std::vector<double>{x})) {}
  HostValue(int x) : v_(HostVector(std::vector<std::int32_t>{x})) {}
  HostValue(bool x) : v_(HostVector(std::vector<Bool>{to_bool(x)})) {}
  HostValue(const char* s) : v_(HostVector(std::vector<std::string>{s})) {}
  HostValue(std::string s) : v_(HostVector(std::vector<std::string>{std::move(s)})) {}
  HostValue(std::complex<double> z) : v_(HostVector(std::vector<std::complex<double>>{z})) {}

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
  const Variant& variant() const { return v_; }

  /// Shorthands for the common case of a numeric or string result.
  double as_double(std::size_t i = 0) const { return as<HostVector>().as_double(i); }
  std::int32_t as_int(std::size_t i = 0) const { return as<HostVector>().as_int(i); }
  const std::string& as_string(std::size_t i = 0) const { return as<HostVector>().as_string(i); }

  friend bool operator==(const HostValue& a, const HostValue& b);

 private:
  Variant v_;
};

struct HostField {
  std::string name;
  HostValue value;
  friend bool operator==(const HostField&, const HostField&) = default;
};

inline bool operator==(const HostList& a, const HostList& b) { return a.items == b.items; }
inline bool operator==(const HostRecord& a, const HostRecord& b) {
  return a.fields == b.fields && a.type_attr == b.type_attr;
}

/// Console rendering used by the REPL.
std::string format_host(const HostValue& v);

}  // namespace bridgewire
