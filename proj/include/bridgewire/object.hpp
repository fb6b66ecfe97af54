#pragma once

/// @file object.hpp
/// @brief Objects as the runtime holds them, and the rules deciding how a
/// result crosses back to the client: translated in full or as a reference.

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bridgewire/value.hpp"

namespace bridgewire::rt {

struct Object;
using ObjectPtr = std::shared_ptr<Object>;

struct NamedObject {
  std::string name;
  ObjectPtr value;
};

/// Struct instance. `mutable_fields` instances can be updated in place, which
/// is the only way object graphs can become cyclic.
struct StructObj {
  std::string type_name;
  std::vector<NamedObject> fields;
  bool mutable_fields = false;
};

/// Heterogeneous vector (element type Any), including arrays of arrays.
struct ListObj {
  std::vector<ObjectPtr> items;
};

struct NamedListObj {
  std::vector<NamedObject> entries;
};

/// Something tied to process state, e.g. an open handle; never translatable.
struct ResourceObj {
  std::string description;
};

class CallContext;

enum class FunctionKind { Builtin, TypeConstructor, Closure, Callback };

/// Callable runtime entity. Subclasses live in the runtime module.
class Function {
 public:
  virtual ~Function() = default;
  virtual FunctionKind kind() const = 0;
  /// Qualified name for builtins and constructors, empty for closures.
  virtual std::string name() const { return {}; }
  /// Client-assigned id for callbacks.
  virtual std::uint64_t callback_id() const { return 0; }
  virtual ObjectPtr call(CallContext& ctx, const std::vector<ObjectPtr>& positional,
                         const std::vector<NamedObject>& named) const = 0;
};

struct FunctionObj {
  std::shared_ptr<const Function> fn;
};

struct Object {
  using Variant =
      std::variant<Null, TypedArray, StructObj, ListObj, NamedListObj, Table, FunctionObj, ResourceObj>;
  Variant v;

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(v);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(v);
  }
  template <class T>
  T& as() {
    return std::get<T>(v);
  }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v);
  }
};

template <class T>
ObjectPtr make(T x) {
  return std::make_shared<Object>(Object{std::move(x)});
}

/// Type name as the runtime reports it, e.g. "Array{Float64,1}".
std::string type_name(const Object& o);

enum class ResultMode { Full, Proxy };

/// Full translation for null, primitive arrays and strings, heterogeneous
/// lists of scalars, and boxed primitives; a reference for everything else.
ResultMode classify_result(const Object& o);

/// Failure of a deep translation, naming the offending node.
class DeepTranslationError : public std::runtime_error {
 public:
  DeepTranslationError(std::string path, const std::string& what);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Recursive full translation carrying every type name needed to rebuild
/// the object. Throws on cycles, resources and closures.
Value deep_translate(const ObjectPtr& o);

/// Structural equality of two object graphs (functions compare by identity).
bool structurally_equal(const ObjectPtr& a, const ObjectPtr& b);

}  // namespace bridgewire::rt
