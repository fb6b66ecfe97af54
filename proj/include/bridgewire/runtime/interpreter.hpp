#pragma once

/// @file interpreter.hpp
/// @brief Tree-walking evaluator, module table and callable kinds.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bridgewire/object.hpp"
#include "bridgewire/runtime/ast.hpp"
#include "bridgewire/wire.hpp"

namespace bridgewire::rt {

/// An evaluation failure. `detail` carries nested context, e.g. the error a
/// client callback reported.
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& what, std::string detail = {})
      : std::runtime_error(what), detail_(std::move(detail)) {}
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
};

enum class EntityKind { Function, Type, Value };

std::string_view entity_kind_name(EntityKind k);

struct Entity {
  EntityKind kind;
  ObjectPtr object;
  bool exported = true;
};

struct Module {
  std::string name;
  std::map<std::string, Entity> entities;  // byte-lexicographic order

  void add(std::string name, Entity e);
};

/// All modules known to a server. Immutable once sessions start.
class ModuleTable {
 public:
  void add(Module m);
  const Module* find(std::string_view name) const;
  /// Resolves "Module.name" (optionally prefixed with "Main."); an
  /// unqualified name resolves against Base.
  const Entity* resolve(std::string_view qualified) const;
  const Entity* resolve(const std::vector<std::string>& segments) const;

 private:
  std::map<std::string, Module, std::less<>> modules_;
};

struct SymbolInfo {
  std::string name;
  EntityKind kind;
  std::string alias;
};

/// Entities of a module in byte-lexicographic name order. Throws EvalError
/// for an unknown module or when two names share an ASCII alias.
std::vector<SymbolInfo> scan_module(const ModuleTable& modules, std::string_view path,
                                    bool include_unexported);

/// Services the evaluator needs from the session it runs in.
class CallContext {
 public:
  virtual ~CallContext() = default;
  virtual const ModuleTable& modules() const = 0;
  virtual ObjectPtr invoke_callback(std::uint64_t id, const std::vector<ObjectPtr>& positional,
                                    const std::vector<NamedObject>& named) = 0;
  virtual void emit(Channel channel, std::string chunk) = 0;
  /// True once the client has gone away; long-running builtins poll this.
  virtual bool cancelled() = 0;
  virtual std::size_t registry_size() const = 0;
};

/// Raised inside an evaluation when the session was cancelled.
class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("evaluation cancelled") {}
};

class Env;
using EnvPtr = std::shared_ptr<const Env>;

/// Immutable lexical scope.
class Env {
 public:
  Env(std::unordered_map<std::string, ObjectPtr> vars, EnvPtr parent)
      : vars_(std::move(vars)), parent_(std::move(parent)) {}
  ObjectPtr lookup(const std::string& name) const;

 private:
  std::unordered_map<std::string, ObjectPtr> vars_;
  EnvPtr parent_;
};

ObjectPtr evaluate(const AstNode& node, const EnvPtr& env, CallContext& ctx);

/// Parses and evaluates `source` in a fresh scope holding `bindings`.
ObjectPtr eval_expression(std::string_view source, const std::vector<NamedObject>& bindings,
                          CallContext& ctx);

/// Calls any callable object; throws EvalError for non-callables.
ObjectPtr call_object(const ObjectPtr& callee, CallContext& ctx,
                      const std::vector<ObjectPtr>& positional,
                      const std::vector<NamedObject>& named = {});

// --- callable kinds -----------------------------------------------------------

using NativeFn = std::function<ObjectPtr(CallContext&, const std::vector<ObjectPtr>&,
                                         const std::vector<NamedObject>&)>;

class Builtin final : public Function {
 public:
  Builtin(std::string name, NativeFn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  FunctionKind kind() const override { return FunctionKind::Builtin; }
  std::string name() const override { return name_; }
  ObjectPtr call(CallContext& ctx, const std::vector<ObjectPtr>& positional,
                 const std::vector<NamedObject>& named) const override {
    return fn_(ctx, positional, named);
  }

 private:
  std::string name_;
  NativeFn fn_;
};

/// Type constructor. Struct types check the field count and widen integer
/// fields; primitive types convert element-wise.
class TypeConstructor final : public Function {
 public:
  struct FieldSpec {
    std::string name;
    std::optional<ElemType> scalar_type;  // nullopt accepts any object
  };

  static std::shared_ptr<TypeConstructor> structure(std::string name, std::vector<FieldSpec> fields);
  static std::shared_ptr<TypeConstructor> primitive(std::string name, ElemType target);

  FunctionKind kind() const override { return FunctionKind::TypeConstructor; }
  std::string name() const override { return name_; }
  ObjectPtr call(CallContext& ctx, const std::vector<ObjectPtr>& positional,
                 const std::vector<NamedObject>& named) const override;

  bool is_struct() const { return !target_.has_value(); }
  const std::vector<FieldSpec>& field_specs() const { return fields_; }
  /// Validates and coerces field values into a struct instance.
  ObjectPtr construct(const std::vector<ObjectPtr>& values) const;

 private:
  TypeConstructor() = default;
  std::string name_;
  std::vector<FieldSpec> fields_;
  std::optional<ElemType> target_;
};

class Closure final : public Function {
 public:
  Closure(std::vector<std::string> params, AstPtr body, EnvPtr env)
      : params_(std::move(params)), body_(std::move(body)), env_(std::move(env)) {}
  FunctionKind kind() const override { return FunctionKind::Closure; }
  ObjectPtr call(CallContext& ctx, const std::vector<ObjectPtr>& positional,
                 const std::vector<NamedObject>& named) const override;

 private:
  std::vector<std::string> params_;
  AstPtr body_;
  EnvPtr env_;
};

/// A client function; calling it sends a CALL back over the connection.
class Callback final : public Function {
 public:
  explicit Callback(std::uint64_t id) : id_(id) {}
  FunctionKind kind() const override { return FunctionKind::Callback; }
  std::uint64_t callback_id() const override { return id_; }
  ObjectPtr call(CallContext& ctx, const std::vector<ObjectPtr>& positional,
                 const std::vector<NamedObject>& named) const override {
    return ctx.invoke_callback(id_, positional, named);
  }

 private:
  std::uint64_t id_;
};

}  // namespace bridgewire::rt
