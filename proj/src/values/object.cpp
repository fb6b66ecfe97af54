#include "bridgewire/object.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_set>

#include "bridgewire/translate.hpp"

namespace bridgewire::rt {

std::string type_name(const Object& o) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          return "Nothing";
        } else if constexpr (std::is_same_v<T, TypedArray>) {
          std::string elem(elem_type_name(x.type()));
          if (x.is_scalar()) return x.any_missing() ? "Missing" : elem;
          if (x.has_missing_bitmap()) elem = fmt::format("Union{{Missing, {}}}", elem);
          return fmt::format("Array{{{},{}}}", elem, x.ndims());
        } else if constexpr (std::is_same_v<T, StructObj>) {
          return x.type_name;
        } else if constexpr (std::is_same_v<T, ListObj>) {
          std::string elem;
          for (const auto& item : x.items) {
            auto t = type_name(*item);
            if (elem.empty()) {
              elem = t;
            } else if (elem != t) {
              elem = "Any";
              break;
            }
          }
          return fmt::format("Array{{{},1}}", elem.empty() ? "Any" : elem);
        } else if constexpr (std::is_same_v<T, NamedListObj>) {
          return "NamedTuple";
        } else if constexpr (std::is_same_v<T, Table>) {
          return "Table";
        } else if constexpr (std::is_same_v<T, FunctionObj>) {
          if (x.fn->kind() == FunctionKind::TypeConstructor) return fmt::format("Type{{{}}}", x.fn->name());
          return "Function";
        } else {
          return "Resource";
        }
      },
      o.v);
}

ResultMode classify_result(const Object& o) {
  return std::visit(
      [](const auto& x) -> ResultMode {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null> || std::is_same_v<T, TypedArray>) {
          return ResultMode::Full;
        } else if constexpr (std::is_same_v<T, StructObj>) {
          const bool boxed = find_boxed_primitive(x.type_name) && x.fields.size() == 1 &&
                             x.fields[0].value->template is<TypedArray>();
          return boxed ? ResultMode::Full : ResultMode::Proxy;
        } else if constexpr (std::is_same_v<T, ListObj> || std::is_same_v<T, NamedListObj>) {
          auto scalar = [](const ObjectPtr& p) {
            if (p->is<Null>()) return true;
            const auto* a = p->get_if<TypedArray>();
            return a && a->is_scalar();
          };
          bool all;
          if constexpr (std::is_same_v<T, ListObj>)
            all = std::all_of(x.items.begin(), x.items.end(), scalar);
          else
            all = std::all_of(x.entries.begin(), x.entries.end(),
                              [&](const NamedObject& e) { return scalar(e.value); });
          return all ? ResultMode::Full : ResultMode::Proxy;
        } else {
          return ResultMode::Proxy;
        }
      },
      o.v);
}

DeepTranslationError::DeepTranslationError(std::string path, const std::string& what)
    : std::runtime_error(fmt::format("{} (at {})", what, path)), path_(std::move(path)) {}

namespace {

class DeepTranslator {
 public:
  Value run(const ObjectPtr& o) { return visit(o); }

 private:
  Value visit(const ObjectPtr& o) {
    if (!on_path_.insert(o.get()).second)
      throw DeepTranslationError(path_, "cycle detected: object refers back to itself");
    Value out = std::visit([this](const auto& x) { return translate(x); }, o->v);
    on_path_.erase(o.get());
    return out;
  }

  Value translate(const Null&) { return Null{}; }
  Value translate(const TypedArray& a) { return a; }
  Value translate(const Table& t) { return t; }

  Value translate(const StructObj& s) {
    return Struct{s.type_name, fields(s.fields)};
  }
  Value translate(const NamedListObj& l) { return NamedList{fields(l.entries)}; }

  Value translate(const ListObj& l) {
    List out;
    out.items.reserve(l.items.size());
    for (std::size_t i = 0; i < l.items.size(); ++i) {
      auto len = path_.size();
      path_ += fmt::format("[{}]", i + 1);
      out.items.push_back(visit(l.items[i]));
      path_.resize(len);
    }
    return out;
  }

  Value translate(const FunctionObj& f) {
    switch (f.fn->kind()) {
      case FunctionKind::Builtin: return FnRef::named(f.fn->name());
      case FunctionKind::TypeConstructor: return FnRef::type_constructor(f.fn->name());
      case FunctionKind::Callback: return FnRef::callback(f.fn->callback_id());
      case FunctionKind::Closure: break;
    }
    throw DeepTranslationError(path_, "anonymous functions cannot be translated");
  }

  Value translate(const ResourceObj& r) {
    throw DeepTranslationError(path_, fmt::format("external resource '{}' cannot be translated", r.description));
  }

  std::vector<Field> fields(const std::vector<NamedObject>& in) {
    std::vector<Field> out;
    out.reserve(in.size());
    for (const auto& f : in) {
      auto len = path_.size();
      path_ += '.';
      path_ += f.name;
      out.push_back({f.name, visit(f.value)});
      path_.resize(len);
    }
    return out;
  }

  std::string path_ = "$";
  std::unordered_set<const Object*> on_path_;
};

bool equal_at(const ObjectPtr& a, const ObjectPtr& b,
              std::unordered_set<const Object*>& visiting) {
  if (a == b) return true;
  if (a->v.index() != b->v.index()) return false;
  if (!visiting.insert(a.get()).second) return true;
  auto named_equal = [&](const std::vector<NamedObject>& x, const std::vector<NamedObject>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].name != y[i].name || !equal_at(x[i].value, y[i].value, visiting)) return false;
    return true;
  };
  bool eq = std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->v);
        if constexpr (std::is_same_v<T, Null>) {
          return true;
        } else if constexpr (std::is_same_v<T, TypedArray> || std::is_same_v<T, Table>) {
          return x == y;
        } else if constexpr (std::is_same_v<T, StructObj>) {
          return x.type_name == y.type_name && x.mutable_fields == y.mutable_fields &&
                 named_equal(x.fields, y.fields);
        } else if constexpr (std::is_same_v<T, NamedListObj>) {
          return named_equal(x.entries, y.entries);
        } else if constexpr (std::is_same_v<T, ListObj>) {
          if (x.items.size() != y.items.size()) return false;
          for (std::size_t i = 0; i < x.items.size(); ++i)
            if (!equal_at(x.items[i], y.items[i], visiting)) return false;
          return true;
        } else if constexpr (std::is_same_v<T, FunctionObj>) {
          if (x.fn == y.fn) return true;
          return x.fn->kind() == y.fn->kind() && x.fn->kind() != FunctionKind::Closure &&
                 x.fn->name() == y.fn->name() && x.fn->callback_id() == y.fn->callback_id();
        } else {
          return x.description == y.description;
        }
      },
      a->v);
  visiting.erase(a.get());
  return eq;
}

}  // namespace

Value deep_translate(const ObjectPtr& o) { return DeepTranslator{}.run(o); }

bool structurally_equal(const ObjectPtr& a, const ObjectPtr& b) {
  std::unordered_set<const Object*> visiting;
  return equal_at(a, b, visiting);
}

}  // namespace bridgewire::rt
