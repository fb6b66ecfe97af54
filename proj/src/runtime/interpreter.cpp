#include "bridgewire/runtime/interpreter.hpp"

#include <fmt/format.h>

#include "bridgewire/alias.hpp"
#include "bridgewire/runtime/builtins.hpp"

namespace bridgewire::rt {

std::string_view entity_kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::Function: return "function";
    case EntityKind::Type: return "type";
    case EntityKind::Value: return "value";
  }
  return "?";
}

void Module::add(std::string n, Entity e) {
  if (!is_identifier(n)) throw std::invalid_argument(fmt::format("invalid entity name '{}'", n));
  if (!entities.emplace(n, std::move(e)).second)
    throw std::invalid_argument(fmt::format("duplicate entity '{}' in module {}", n, name));
}

void ModuleTable::add(Module m) {
  auto name = m.name;
  if (!modules_.emplace(name, std::move(m)).second)
    throw std::invalid_argument(fmt::format("duplicate module '{}'", name));
}

const Module* ModuleTable::find(std::string_view name) const {
  if (name.starts_with("Main.")) name.remove_prefix(5);
  auto it = modules_.find(name);
  return it == modules_.end() ? nullptr : &it->second;
}

const Entity* ModuleTable::resolve(const std::vector<std::string>& segments) const {
  std::size_t i = 0;
  if (segments.size() > 1 && segments[0] == "Main") ++i;
  const Module* mod = nullptr;
  if (segments.size() - i == 1) {
    mod = find("Base");
  } else if (segments.size() - i == 2) {
    mod = find(segments[i]);
    ++i;
  }
  if (!mod) return nullptr;
  auto it = mod->entities.find(segments[i]);
  return it == mod->entities.end() ? nullptr : &it->second;
}

const Entity* ModuleTable::resolve(std::string_view qualified) const {
  std::vector<std::string> segments;
  std::size_t start = 0;
  while (true) {
    auto dot = qualified.find('.', start);
    segments.emplace_back(qualified.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return resolve(segments);
}

std::vector<SymbolInfo> scan_module(const ModuleTable& modules, std::string_view path,
                                    bool include_unexported) {
  const Module* mod = modules.find(path);
  if (!mod) throw EvalError(fmt::format("ArgumentError: unknown module '{}'", path));
  std::vector<SymbolInfo> out;
  std::map<std::string, std::string> owner;  // alias or name -> entity name
  auto claim = [&](const std::string& key, const std::string& name) {
    auto [it, fresh] = owner.emplace(key, name);
    if (!fresh && it->second != name)
      throw EvalError(fmt::format("alias collision in module {}: '{}' and '{}' both map to '{}'", mod->name,
                                  it->second, name, key));
  };
  for (const auto& [name, e] : mod->entities) {
    if (!e.exported && !include_unexported) continue;
    out.push_back({name, e.kind, ascii_alias(name)});
    claim(name, name);
  }
  for (const auto& s : out) claim(s.alias, s.name);
  return out;
}

ObjectPtr Env::lookup(const std::string& name) const {
  for (const Env* e = this; e; e = e->parent_.get()) {
    auto it = e->vars_.find(name);
    if (it != e->vars_.end()) return it->second;
  }
  return nullptr;
}

namespace {

std::string join_path(const std::vector<std::string>& segs, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n && i < segs.size(); ++i) {
    if (i) out += '.';
    out += segs[i];
  }
  return out;
}

ObjectPtr eval_path(const PathExpr& p, const EnvPtr& env, CallContext& ctx) {
  const auto& segs = p.segments;
  if (auto local = env ? env->lookup(segs[0]) : nullptr) {
    for (std::size_t i = 1; i < segs.size(); ++i) local = get_field(local, segs[i]);
    return local;
  }
  // Longest module-qualified prefix that names an entity, then field access.
  for (std::size_t n = std::min<std::size_t>(segs.size(), 3); n >= 1; --n) {
    std::vector<std::string> prefix(segs.begin(), segs.begin() + static_cast<std::ptrdiff_t>(n));
    if (const auto* e = ctx.modules().resolve(prefix)) {
      auto obj = e->object;
      for (std::size_t i = n; i < segs.size(); ++i) obj = get_field(obj, segs[i]);
      return obj;
    }
  }
  if (segs.size() > 1 && !ctx.modules().find(segs[0]) && segs[0] != "Main")
    throw EvalError(fmt::format("UndefVarError: {} not defined", segs[0]));
  throw EvalError(fmt::format("UndefVarError: {} not defined", join_path(segs, segs.size())));
}

ObjectPtr eval_array(const ArrayLitExpr& a, const EnvPtr& env, CallContext& ctx) {
  std::vector<ObjectPtr> items;
  items.reserve(a.items.size());
  bool scalars = !a.items.empty();
  for (const auto& item : a.items) {
    items.push_back(evaluate(*item, env, ctx));
    const auto* arr = items.back()->get_if<TypedArray>();
    if (!arr || !arr->is_scalar()) scalars = false;
  }
  if (scalars) return vcat(items);
  return make(ListObj{std::move(items)});
}

}  // namespace

ObjectPtr evaluate(const AstNode& node, const EnvPtr& env, CallContext& ctx) {
  if (ctx.cancelled()) throw Cancelled();
  return std::visit(
      [&](const auto& n) -> ObjectPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, LiteralExpr>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, PathExpr>) {
          return eval_path(n, env, ctx);
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          auto target = evaluate(*n.target, env, ctx);
          std::vector<ObjectPtr> positional;
          positional.reserve(n.positional.size());
          for (const auto& a : n.positional) positional.push_back(evaluate(*a, env, ctx));
          std::vector<NamedObject> named;
          named.reserve(n.named.size());
          for (const auto& a : n.named) named.push_back({a.name, evaluate(*a.value, env, ctx)});
          return call_object(target, ctx, positional, named);
        } else if constexpr (std::is_same_v<T, LambdaExpr>) {
          return make(FunctionObj{std::make_shared<Closure>(n.params, n.body, env)});
        } else if constexpr (std::is_same_v<T, BinOpExpr>) {
          auto lhs = evaluate(*n.lhs, env, ctx);
          auto rhs = evaluate(*n.rhs, env, ctx);
          return arith(n.op, lhs, rhs);
        } else if constexpr (std::is_same_v<T, NegExpr>) {
          return negate(evaluate(*n.operand, env, ctx));
        } else {
          return eval_array(n, env, ctx);
        }
      },
      node.node);
}

ObjectPtr eval_expression(std::string_view source, const std::vector<NamedObject>& bindings,
                          CallContext& ctx) {
  auto ast = parse(source);
  std::unordered_map<std::string, ObjectPtr> vars;
  for (const auto& b : bindings) {
    if (!is_identifier(b.name)) throw EvalError(fmt::format("invalid binding name '{}'", b.name));
    vars[b.name] = b.value;
  }
  auto env = std::make_shared<const Env>(std::move(vars), nullptr);
  return evaluate(*ast, env, ctx);
}

ObjectPtr call_object(const ObjectPtr& callee, CallContext& ctx,
                      const std::vector<ObjectPtr>& positional,
                      const std::vector<NamedObject>& named) {
  const auto* f = callee->get_if<FunctionObj>();
  if (!f) throw EvalError(fmt::format("MethodError: objects of type {} are not callable", type_name(*callee)));
  if (ctx.cancelled()) throw Cancelled();
  return f->fn->call(ctx, positional, named);
}

ObjectPtr Closure::call(CallContext& ctx, const std::vector<ObjectPtr>& positional,
                        const std::vector<NamedObject>& named) const {
  if (!named.empty())
    throw EvalError(fmt::format("MethodError: anonymous function does not accept keyword argument '{}'",
                                named.front().name));
  if (positional.size() != params_.size())
    throw EvalError(fmt::format("MethodError: anonymous function takes {} argument(s), got {}",
                                params_.size(), positional.size()));
  std::unordered_map<std::string, ObjectPtr> vars;
  for (std::size_t i = 0; i < params_.size(); ++i) vars[params_[i]] = positional[i];
  auto env = std::make_shared<const Env>(std::move(vars), env_);
  return evaluate(*body_, env, ctx);
}

}  // namespace bridgewire::rt
