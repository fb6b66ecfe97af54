#include "bridgewire/runtime/builtins.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <thread>

#include "bridgewire/alias.hpp"

namespace bridgewire::rt {

namespace {

using Positional = std::vector<ObjectPtr>;
using Named = std::vector<NamedObject>;

// --- element access -----------------------------------------------------------

enum class Kind { Bool, Int, Float, Complex, String };

Kind kind_of(ElemType t) {
  switch (t) {
    case ElemType::Bool: return Kind::Bool;
    case ElemType::I64:
    case ElemType::I32:
    case ElemType::I16:
    case ElemType::I8:
    case ElemType::U8: return Kind::Int;
    case ElemType::F64:
    case ElemType::F32: return Kind::Float;
    case ElemType::C128:
    case ElemType::C64: return Kind::Complex;
    case ElemType::String: break;
  }
  return Kind::String;
}

bool is_int_type(ElemType t) { return kind_of(t) == Kind::Int; }

/// One numeric element in a form wide enough for every element type.
struct Num {
  bool exact = false;  // `i` is authoritative
  std::int64_t i = 0;
  std::complex<double> z;
};

template <class T>
Num to_num(const T& x) {
  if constexpr (std::is_same_v<T, Bool>) {
    return {true, from_bool(x) ? 1 : 0, from_bool(x) ? 1.0 : 0.0};
  } else if constexpr (std::is_integral_v<T>) {
    return {true, static_cast<std::int64_t>(x), static_cast<double>(x)};
  } else if constexpr (std::is_floating_point_v<T>) {
    return {false, 0, static_cast<double>(x)};
  } else {
    return {false, 0, std::complex<double>(x.real(), x.imag())};
  }
}

/// Calls f(i, Num) for every element; missing slots are skipped.
template <class F>
void for_each_num(const TypedArray& a, F&& f) {
  std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, std::string>) {
          throw EvalError("MethodError: expected a numeric array, got String");
        } else {
          for (std::size_t i = 0; i < v.size(); ++i)
            if (!a.is_missing(i)) f(i, to_num(v[i]));
        }
      },
      a.data());
}

[[noreturn]] void inexact(ElemType to, const Num& n) {
  std::string shown = n.exact ? std::to_string(n.i)
                              : (n.z.imag() == 0 ? fmt::format("{}", n.z.real())
                                                 : fmt::format("{}+{}im", n.z.real(), n.z.imag()));
  throw EvalError(fmt::format("InexactError: {}({})", elem_type_name(to), shown));
}

template <class T>
T narrow_int(const Num& n, ElemType to) {
  std::int64_t v;
  if (n.exact) {
    v = n.i;
  } else {
    const double d = n.z.real();
    if (n.z.imag() != 0 || !std::isfinite(d) || std::trunc(d) != d || d < -9.223372036854775808e18 ||
        d >= 9.223372036854775808e18)
      inexact(to, n);
    v = static_cast<std::int64_t>(d);
  }
  if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
      v > static_cast<std::int64_t>(std::numeric_limits<T>::max()))
    inexact(to, n);
  return static_cast<T>(v);
}

double real_of(const Num& n, ElemType to) {
  if (n.z.imag() != 0) inexact(to, n);
  return n.exact ? static_cast<double>(n.i) : n.z.real();
}

void copy_bitmap(const TypedArray& from, TypedArray& to) {
  if (from.has_missing_bitmap()) to.set_bitmap(*from.missing_bitmap());
}

}  // namespace

/// Element-wise conversion; integer targets reject inexact values.
TypedArray convert_array(const TypedArray& a, ElemType to) {
  if (a.type() == to) return a;
  if (a.type() == ElemType::String || to == ElemType::String)
    throw EvalError(fmt::format("MethodError: cannot convert {} to {}", elem_type_name(a.type()),
                                elem_type_name(to)));
  TypedArray out = TypedArray::zeros(to, a.dims());
  std::visit(
      [&](auto& dst) {
        using T = typename std::decay_t<decltype(dst)>::value_type;
        for_each_num(a, [&](std::size_t i, const Num& n) {
          if constexpr (std::is_same_v<T, Bool>) {
            auto v = narrow_int<std::int8_t>(n, to);
            if (v != 0 && v != 1) inexact(to, n);
            dst[i] = to_bool(v == 1);
          } else if constexpr (std::is_integral_v<T>) {
            dst[i] = narrow_int<T>(n, to);
          } else if constexpr (std::is_floating_point_v<T>) {
            dst[i] = static_cast<T>(real_of(n, to));
          } else if constexpr (std::is_same_v<T, std::string>) {
            // unreachable: string conversions rejected above
          } else {
            dst[i] = T(static_cast<typename T::value_type>(n.exact ? static_cast<double>(n.i) : n.z.real()),
                       static_cast<typename T::value_type>(n.z.imag()));
          }
        });
      },
      out.data());
  copy_bitmap(a, out);
  return out;
}

namespace {

const TypedArray& array_arg(const ObjectPtr& o, std::string_view fn) {
  const auto* a = o->get_if<TypedArray>();
  if (!a) throw EvalError(fmt::format("MethodError: no method matching {}(::{})", fn, type_name(*o)));
  return *a;
}

const TypedArray& numeric_arg(const ObjectPtr& o, std::string_view fn) {
  const auto& a = array_arg(o, fn);
  if (a.type() == ElemType::String)
    throw EvalError(fmt::format("MethodError: no method matching {}(::{})", fn, type_name(*o)));
  return a;
}

void expect_arity(const Positional& p, const Named& n, std::size_t count, std::string_view fn) {
  if (!n.empty())
    throw EvalError(fmt::format("MethodError: {} got unsupported keyword argument '{}'", fn, n.front().name));
  if (p.size() != count)
    throw EvalError(fmt::format("MethodError: {} expects {} argument(s), got {}", fn, count, p.size()));
}

std::string string_arg(const ObjectPtr& o, std::string_view fn) {
  const auto* a = o->get_if<TypedArray>();
  if (!a || a->type() != ElemType::String || !a->is_scalar() || a->any_missing())
    throw EvalError(fmt::format("MethodError: {} expects a String, got {}", fn, type_name(*o)));
  return a->as<std::string>()[0];
}

/// Common element type for concatenation and arithmetic, or nullopt when
/// strings are mixed with numbers.
std::optional<ElemType> promote(const std::vector<ElemType>& types) {
  if (types.empty()) return ElemType::F64;
  bool all_same = std::all_of(types.begin(), types.end(), [&](ElemType t) { return t == types[0]; });
  if (all_same) return types[0];
  bool any_string = false, any_complex = false, any_float = false, wide_float = false, wide_complex = false;
  for (auto t : types) {
    switch (kind_of(t)) {
      case Kind::String: any_string = true; break;
      case Kind::Complex:
        any_complex = true;
        if (t == ElemType::C128) wide_complex = true;
        break;
      case Kind::Float:
        any_float = true;
        if (t == ElemType::F64) wide_float = true;
        break;
      default: break;
    }
  }
  if (any_string) return std::nullopt;
  if (any_complex) return (wide_complex || wide_float) ? ElemType::C128 : ElemType::C64;
  if (any_float) return wide_float ? ElemType::F64 : ElemType::F32;
  return ElemType::I64;
}

TypedArray element_at(const TypedArray& a, std::size_t i) {
  return std::visit(
      [&](const auto& v) {
        auto s = TypedArray::scalar(v[i]);
        if (a.is_missing(i)) s.set_missing(0);
        return s;
      },
      a.data());
}

// --- arithmetic ---------------------------------------------------------------

std::string dims_string(const TypedArray& a) {
  if (a.is_scalar()) return "()";
  std::string s = "(";
  for (std::size_t i = 0; i < a.dims().size(); ++i) s += fmt::format("{}{}", i ? "," : "", a.dims()[i]);
  return s + (a.dims().size() == 1 ? ",)" : ")");
}

std::complex<double> as_complex(const Num& n) {
  return n.exact ? std::complex<double>(static_cast<double>(n.i), 0) : n.z;
}

}  // namespace

ObjectPtr arith(char op, const ObjectPtr& lhs, const ObjectPtr& rhs) {
  const auto* a = lhs->get_if<TypedArray>();
  const auto* b = rhs->get_if<TypedArray>();
  if (!a || !b || a->type() == ElemType::String || b->type() == ElemType::String)
    throw EvalError(fmt::format("MethodError: no method matching {}(::{}, ::{})", op, type_name(*lhs),
                                type_name(*rhs)));
  const bool sa = a->is_scalar(), sb = b->is_scalar();
  if (!sa && !sb && a->dims() != b->dims())
    throw EvalError(fmt::format("DimensionMismatch: arrays could not be broadcast to a common size; got dimensions {} and {}",
                                dims_string(*a), dims_string(*b)));
  const auto& dims = sa ? b->dims() : a->dims();
  const std::size_t n = sa ? b->size() : a->size();

  auto target = *promote({a->type(), b->type()});
  const Kind k = kind_of(target);
  if (k == Kind::Bool || k == Kind::Int) target = op == '/' ? ElemType::F64 : ElemType::I64;

  // Widen both sides to one representation, then combine.
  std::vector<Num> x(a->size()), y(b->size());
  for_each_num(*a, [&](std::size_t i, const Num& v) { x[i] = v; });
  for_each_num(*b, [&](std::size_t i, const Num& v) { y[i] = v; });

  TypedArray out = TypedArray::zeros(target, dims);
  const bool bitmap = a->has_missing_bitmap() || b->has_missing_bitmap();
  if (bitmap) out.ensure_bitmap();
  std::visit(
      [&](auto& dst) {
        using T = typename std::decay_t<decltype(dst)>::value_type;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t ia = sa ? 0 : i, ib = sb ? 0 : i;
          if (a->is_missing(ia) || b->is_missing(ib)) {
            out.set_missing(i);
            continue;
          }
          const Num& p = x[ia];
          const Num& q = y[ib];
          if constexpr (std::is_same_v<T, std::int64_t>) {
            const auto u = static_cast<std::uint64_t>(p.i), v = static_cast<std::uint64_t>(q.i);
            std::uint64_t r = 0;
            switch (op) {
              case '+': r = u + v; break;
              case '-': r = u - v; break;
              case '*': r = u * v; break;
            }
            dst[i] = static_cast<std::int64_t>(r);
          } else if constexpr (std::is_floating_point_v<T>) {
            const double u = p.exact ? static_cast<double>(p.i) : p.z.real();
            const double v = q.exact ? static_cast<double>(q.i) : q.z.real();
            double r = 0;
            switch (op) {
              case '+': r = u + v; break;
              case '-': r = u - v; break;
              case '*': r = u * v; break;
              case '/': r = u / v; break;
            }
            dst[i] = static_cast<T>(r);
          } else if constexpr (std::is_same_v<T, std::complex<double>> ||
                               std::is_same_v<T, std::complex<float>>) {
            const auto u = as_complex(p), v = as_complex(q);
            std::complex<double> r;
            switch (op) {
              case '+': r = u + v; break;
              case '-': r = u - v; break;
              case '*': r = u * v; break;
              case '/': r = u / v; break;
            }
            dst[i] = T(static_cast<typename T::value_type>(r.real()), static_cast<typename T::value_type>(r.imag()));
          }
        }
      },
      out.data());
  return make(std::move(out));
}

ObjectPtr negate(const ObjectPtr& x) {
  const auto& a = numeric_arg(x, "-");
  auto zero = TypedArray::scalar(std::int64_t{0});
  if (kind_of(a.type()) == Kind::Float || kind_of(a.type()) == Kind::Complex)
    zero = convert_array(zero, a.type());
  return arith('-', make(std::move(zero)), x);
}

ObjectPtr vcat(const std::vector<ObjectPtr>& parts) {
  std::vector<ElemType> types;
  bool list = parts.empty();
  for (const auto& p : parts) {
    const auto* a = p->get_if<TypedArray>();
    if (!a) {
      list = true;
      continue;
    }
    if (a->ndims() > 1)
      throw EvalError(fmt::format("ArgumentError: vcat supports only scalars and vectors, got {}", type_name(*p)));
    types.push_back(a->type());
  }
  std::optional<ElemType> target;
  if (!list) target = promote(types);
  if (!target) {
    // Heterogeneous: flatten vectors into a list of scalars, keep other objects.
    ListObj out;
    for (const auto& p : parts) {
      if (const auto* a = p->get_if<TypedArray>()) {
        if (a->is_scalar()) {
          out.items.push_back(p);
        } else {
          for (std::size_t i = 0; i < a->size(); ++i) out.items.push_back(make(element_at(*a, i)));
        }
      } else if (const auto* l = p->get_if<ListObj>()) {
        out.items.insert(out.items.end(), l->items.begin(), l->items.end());
      } else {
        out.items.push_back(p);
      }
    }
    return make(std::move(out));
  }
  std::size_t total = 0;
  bool bitmap = false;
  for (const auto& p : parts) {
    total += p->as<TypedArray>().size();
    bitmap = bitmap || p->as<TypedArray>().has_missing_bitmap();
  }
  TypedArray out = TypedArray::zeros(*target, {static_cast<std::int64_t>(total)});
  if (bitmap) out.ensure_bitmap();
  std::size_t at = 0;
  for (const auto& p : parts) {
    const TypedArray src = convert_array(p->as<TypedArray>(), *target);
    std::visit(
        [&](auto& dst) {
          using V = std::decay_t<decltype(dst)>;
          const auto& s = src.as<typename V::value_type>();
          std::copy(s.begin(), s.end(), dst.begin() + static_cast<std::ptrdiff_t>(at));
        },
        out.data());
    for (std::size_t i = 0; i < src.size(); ++i)
      if (src.is_missing(i)) out.set_missing(at + i);
    at += src.size();
  }
  return make(std::move(out));
}

ObjectPtr get_field(const ObjectPtr& obj, const std::string& name) {
  auto find = [&](const std::vector<NamedObject>& fields) -> ObjectPtr {
    for (const auto& f : fields)
      if (f.name == name) return f.value;
    return nullptr;
  };
  ObjectPtr found;
  if (const auto* s = obj->get_if<StructObj>()) {
    found = find(s->fields);
  } else if (const auto* l = obj->get_if<NamedListObj>()) {
    found = find(l->entries);
  } else if (const auto* t = obj->get_if<Table>()) {
    for (const auto& c : t->columns)
      if (c.name == name) return make(c.data);
  }
  if (!found) throw EvalError(fmt::format("FieldError: type {} has no field {}", type_name(*obj), name));
  return found;
}

// --- display ------------------------------------------------------------------

namespace {

std::string show_float(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Inf" : "-Inf";
  std::string s = fmt::format("{}", d);
  auto e = s.find('e');
  std::string mant = s.substr(0, e), exp = e == std::string::npos ? "" : s.substr(e + 1);
  if (mant.find('.') == std::string::npos) mant += ".0";
  if (exp.empty()) return mant;
  if (exp[0] == '+') exp.erase(0, 1);
  return mant + "e" + exp;
}

template <class T>
std::string show_elem(const T& x, bool quote) {
  if constexpr (std::is_same_v<T, Bool>) {
    return from_bool(x) ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!quote) return x;
    std::string out = "\"";
    for (char c : x) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(static_cast<std::int64_t>(x));
  } else if constexpr (std::is_floating_point_v<T>) {
    return show_float(static_cast<double>(x));
  } else {
    const double im = static_cast<double>(x.imag());
    return fmt::format("{} {} {}im", show_float(static_cast<double>(x.real())), std::signbit(im) ? "-" : "+",
                       show_float(std::abs(im)));
  }
}

std::string show_array(const TypedArray& a, bool quote) {
  return std::visit(
      [&](const auto& v) -> std::string {
        auto el = [&](std::size_t i) { return a.is_missing(i) ? std::string("missing") : show_elem(v[i], quote); };
        if (a.is_scalar()) return el(0);
        std::string out = "[";
        if (a.ndims() == 2) {
          const auto rows = static_cast<std::size_t>(a.dims()[0]), cols = static_cast<std::size_t>(a.dims()[1]);
          for (std::size_t r = 0; r < rows; ++r) {
            if (r) out += "; ";
            for (std::size_t c = 0; c < cols; ++c) out += (c ? " " : "") + el(c * rows + r);
          }
          return out + "]";
        }
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + el(i);
        out += "]";
        if (a.ndims() > 2) {
          std::string shape;
          for (auto d : a.dims()) shape += fmt::format(", {}", d);
          return "reshape(" + out + shape + ")";
        }
        return out;
      },
      a.data());
}

std::string show(const Object& o, bool quote) {
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        auto fields = [](const std::vector<NamedObject>& fs, bool names) {
          std::string out;
          for (std::size_t i = 0; i < fs.size(); ++i) {
            if (i) out += ", ";
            if (names) out += fs[i].name + " = ";
            out += show(*fs[i].value, true);
          }
          return out;
        };
        if constexpr (std::is_same_v<T, Null>) {
          return "nothing";
        } else if constexpr (std::is_same_v<T, TypedArray>) {
          return show_array(x, quote);
        } else if constexpr (std::is_same_v<T, StructObj>) {
          return x.type_name + "(" + fields(x.fields, false) + ")";
        } else if constexpr (std::is_same_v<T, ListObj>) {
          std::string out = "Any[";
          for (std::size_t i = 0; i < x.items.size(); ++i) out += (i ? ", " : "") + show(*x.items[i], true);
          return out + "]";
        } else if constexpr (std::is_same_v<T, NamedListObj>) {
          return "(" + fields(x.entries, true) + (x.entries.size() == 1 ? ",)" : ")");
        } else if constexpr (std::is_same_v<T, Table>) {
          std::string out = "Table(";
          for (std::size_t i = 0; i < x.columns.size(); ++i)
            out += (i ? ", " : "") + x.columns[i].name + " = " + show_array(x.columns[i].data, true);
          return out + ")";
        } else if constexpr (std::is_same_v<T, FunctionObj>) {
          auto n = x.fn->name();
          if (x.fn->kind() == FunctionKind::Callback) return fmt::format("callback #{}", x.fn->callback_id());
          return n.empty() ? "#anonymous" : n;
        } else {
          return "Resource(" + x.description + ")";
        }
      },
      o.v);
}

}  // namespace

std::string display_string(const Object& o) { return show(o, false); }

// --- TypeConstructor ----------------------------------------------------------

std::shared_ptr<TypeConstructor> TypeConstructor::structure(std::string name, std::vector<FieldSpec> fields) {
  std::shared_ptr<TypeConstructor> t(new TypeConstructor());
  t->name_ = std::move(name);
  t->fields_ = std::move(fields);
  return t;
}

std::shared_ptr<TypeConstructor> TypeConstructor::primitive(std::string name, ElemType target) {
  std::shared_ptr<TypeConstructor> t(new TypeConstructor());
  t->name_ = std::move(name);
  t->target_ = target;
  return t;
}

ObjectPtr TypeConstructor::construct(const std::vector<ObjectPtr>& values) const {
  if (values.size() != fields_.size())
    throw EvalError(fmt::format("MethodError: {} has {} field(s), got {} argument(s)", name_, fields_.size(),
                                values.size()));
  StructObj s{name_, {}, false};
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const auto& spec = fields_[i];
    ObjectPtr v = values[i];
    if (spec.scalar_type) {
      const auto* a = v->get_if<TypedArray>();
      const ElemType want = *spec.scalar_type;
      const bool ok = a && a->is_scalar() && !a->any_missing() &&
                      (a->type() == want || (is_int_type(a->type()) && is_int_type(want)));
      if (!ok)
        throw EvalError(fmt::format("MethodError: {} field '{}' expects {}, got {}", name_, spec.name,
                                    elem_type_name(want), type_name(*v)));
      if (a->type() != want) v = make(convert_array(*a, want));
    }
    s.fields.push_back({spec.name, std::move(v)});
  }
  return make(std::move(s));
}

ObjectPtr TypeConstructor::call(CallContext&, const std::vector<ObjectPtr>& positional,
                                const std::vector<NamedObject>& named) const {
  if (!named.empty())
    throw EvalError(fmt::format("MethodError: {} does not accept keyword argument '{}'", name_, named.front().name));
  if (!target_) return construct(positional);
  if (positional.size() != 1)
    throw EvalError(fmt::format("MethodError: {} expects 1 argument, got {}", name_, positional.size()));
  const auto& a = array_arg(positional[0], name_);
  return make(convert_array(a, *target_));
}

// --- Base ---------------------------------------------------------------------

namespace {

void add_fn(Module& m, const std::string& name, NativeFn fn, bool exported = true) {
  m.add(name, Entity{EntityKind::Function,
                     make(FunctionObj{std::make_shared<Builtin>(m.name + "." + name, std::move(fn))}), exported});
}

void add_type(Module& m, std::shared_ptr<TypeConstructor> t) {
  auto short_name = t->name().substr(m.name.size() + 1);
  m.add(short_name, Entity{EntityKind::Type, make(FunctionObj{std::move(t)}), true});
}

/// Maps a real function over a numeric array; the result is Float64 unless
/// the input is Float32. `check` may reject an input value.
ObjectPtr map_real(const ObjectPtr& x, std::string_view fn, double (*f)(double),
                   bool (*domain_ok)(double) = nullptr) {
  const auto& a = numeric_arg(x, fn);
  if (kind_of(a.type()) == Kind::Complex)
    throw EvalError(fmt::format("MethodError: no method matching {}(::{})", fn, type_name(*x)));
  const ElemType target = a.type() == ElemType::F32 ? ElemType::F32 : ElemType::F64;
  TypedArray out = TypedArray::zeros(target, a.dims());
  copy_bitmap(a, out);
  for_each_num(a, [&](std::size_t i, const Num& n) {
    const double d = n.exact ? static_cast<double>(n.i) : n.z.real();
    if (domain_ok && !domain_ok(d))
      throw EvalError(fmt::format("DomainError with {}: {} was called with an argument outside its domain",
                                  show_float(d), fn));
    const double r = f(d);
    if (target == ElemType::F32)
      out.as<float>()[i] = static_cast<float>(r);
    else
      out.as<double>()[i] = r;
  });
  return make(std::move(out));
}

ObjectPtr builtin_sqrt(const ObjectPtr& x) {
  const auto& a = numeric_arg(x, "sqrt");
  if (kind_of(a.type()) == Kind::Complex) {
    TypedArray out = convert_array(a, ElemType::C128);
    auto& v = out.as<std::complex<double>>();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!out.is_missing(i)) v[i] = std::sqrt(v[i]);
    return make(a.type() == ElemType::C64 ? convert_array(out, ElemType::C64) : std::move(out));
  }
  for_each_num(a, [](std::size_t, const Num& n) {
    const double d = n.exact ? static_cast<double>(n.i) : n.z.real();
    if (d < 0)
      throw EvalError(fmt::format(
          "DomainError with {}: sqrt was called with a negative real argument but will only return a complex result "
          "if called with a complex argument",
          show_float(d)));
  });
  return map_real(x, "sqrt", [](double d) { return std::sqrt(d); });
}

ObjectPtr builtin_sum(const ObjectPtr& x) {
  const auto& a = numeric_arg(x, "sum");
  const Kind k = kind_of(a.type());
  const ElemType target = k == Kind::Complex ? ElemType::C128
                          : k == Kind::Float ? a.type()
                                             : ElemType::I64;
  if (a.any_missing()) return make(TypedArray::all_missing(target, {}));
  std::int64_t si = 0;
  double sf = 0;
  std::complex<double> sc;
  for_each_num(a, [&](std::size_t, const Num& n) {
    si = static_cast<std::int64_t>(static_cast<std::uint64_t>(si) + static_cast<std::uint64_t>(n.i));
    sf += n.z.real();
    sc += as_complex(n);
  });
  switch (target) {
    case ElemType::I64: return make(TypedArray::scalar(si));
    case ElemType::F32: return make(TypedArray::scalar(static_cast<float>(sf)));
    case ElemType::F64: return make(TypedArray::scalar(sf));
    default: return make(TypedArray::scalar(sc));
  }
}

ObjectPtr builtin_map(CallContext& ctx, const Positional& p) {
  if (p.size() < 2) throw EvalError("MethodError: map expects a function and at least one collection");
  const auto& f = p[0];
  bool all_scalar = true;
  std::optional<std::size_t> n;
  for (std::size_t j = 1; j < p.size(); ++j) {
    std::size_t len;
    if (const auto* a = p[j]->get_if<TypedArray>()) {
      len = a->size();
      if (!a->is_scalar()) all_scalar = false;
    } else if (const auto* l = p[j]->get_if<ListObj>()) {
      len = l->items.size();
      all_scalar = false;
    } else {
      throw EvalError(fmt::format("MethodError: map cannot iterate over {}", type_name(*p[j])));
    }
    if (n && *n != len)
      throw EvalError(fmt::format("DimensionMismatch: map over collections of lengths {} and {}", *n, len));
    n = len;
  }
  auto item = [&](std::size_t j, std::size_t i) -> ObjectPtr {
    if (const auto* a = p[j]->get_if<TypedArray>()) return a->is_scalar() ? p[j] : make(element_at(*a, i));
    return p[j]->as<ListObj>().items[i];
  };
  std::vector<ObjectPtr> results;
  results.reserve(*n);
  for (std::size_t i = 0; i < *n; ++i) {
    std::vector<ObjectPtr> args;
    for (std::size_t j = 1; j < p.size(); ++j) args.push_back(item(j, i));
    results.push_back(call_object(f, ctx, args));
  }
  if (all_scalar) return results.front();
  if (results.empty()) return make(ListObj{});
  const bool scalars = std::all_of(results.begin(), results.end(), [](const ObjectPtr& r) {
    const auto* a = r->get_if<TypedArray>();
    return a && a->is_scalar();
  });
  if (scalars) return vcat(results);
  return make(ListObj{std::move(results)});
}

ObjectPtr builtin_maketable(const Positional& p, const Named& named) {
  std::vector<NamedObject> cols;
  if (p.size() == 1 && named.empty() && p[0]->is<NamedListObj>()) {
    cols = p[0]->as<NamedListObj>().entries;
  } else if (p.empty()) {
    cols = named;
  } else {
    throw EvalError("MethodError: maketable takes named columns, e.g. maketable(; x = [1.0, 2.0])");
  }
  Table t;
  for (const auto& c : cols) {
    const auto* a = c.value->get_if<TypedArray>();
    if (!a || a->ndims() > 1)
      throw EvalError(fmt::format("ArgumentError: column {} must be a vector, got {}", c.name, type_name(*c.value)));
    TypedArray data = *a;
    if (data.is_scalar()) data.reshape({1});
    if (!t.columns.empty() && data.size() != t.rows())
      throw EvalError(fmt::format("DimensionMismatch: column {} has {} rows, expected {}", c.name, data.size(),
                                  t.rows()));
    t.columns.push_back({c.name, std::move(data)});
  }
  return make(std::move(t));
}

ObjectPtr builtin_select(const Positional& p) {
  if (p.empty() || !p[0]->is<Table>()) throw EvalError("MethodError: select expects a table as first argument");
  const auto& t = p[0]->as<Table>();
  Table out;
  for (std::size_t i = 1; i < p.size(); ++i) {
    auto name = string_arg(p[i], "select");
    auto it = std::find_if(t.columns.begin(), t.columns.end(), [&](const Column& c) { return c.name == name; });
    if (it == t.columns.end()) throw EvalError(fmt::format("ArgumentError: table has no column '{}'", name));
    out.columns.push_back(*it);
  }
  return make(std::move(out));
}

ObjectPtr builtin_length(const ObjectPtr& x) {
  std::int64_t n = 0;
  if (const auto* a = x->get_if<TypedArray>()) {
    n = a->is_scalar() && a->type() == ElemType::String && !a->any_missing()
            ? static_cast<std::int64_t>(utf8_codepoints(a->as<std::string>()[0]).size())
            : static_cast<std::int64_t>(a->size());
  } else if (const auto* l = x->get_if<ListObj>()) {
    n = static_cast<std::int64_t>(l->items.size());
  } else if (const auto* nl = x->get_if<NamedListObj>()) {
    n = static_cast<std::int64_t>(nl->entries.size());
  } else if (const auto* t = x->get_if<Table>()) {
    n = static_cast<std::int64_t>(t->rows());
  } else {
    throw EvalError(fmt::format("MethodError: no method matching length(::{})", type_name(*x)));
  }
  return make(TypedArray::scalar(n));
}

ObjectPtr builtin_argmax(const ObjectPtr& x) {
  const auto& a = numeric_arg(x, "argmax");
  if (kind_of(a.type()) == Kind::Complex) throw EvalError("MethodError: argmax is undefined for complex numbers");
  std::optional<std::size_t> best;
  double best_v = 0;
  for_each_num(a, [&](std::size_t i, const Num& n) {
    const double d = n.exact ? static_cast<double>(n.i) : n.z.real();
    // NaN orders above every number.
    const bool greater = !best || (std::isnan(d) && !std::isnan(best_v)) || (!std::isnan(best_v) && d > best_v);
    if (greater) {
      best = i;
      best_v = d;
    }
  });
  if (!best) throw EvalError("ArgumentError: argmax of an empty or all-missing collection");
  return make(TypedArray::scalar(static_cast<std::int64_t>(*best + 1)));
}

}  // namespace

Module make_base_module() {
  Module m{"Base", {}};
  add_fn(m, "map", [](CallContext& ctx, const Positional& p, const Named& n) {
    if (!n.empty()) throw EvalError("MethodError: map does not accept keyword arguments");
    return builtin_map(ctx, p);
  });
  add_fn(m, "sqrt", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "sqrt");
    return builtin_sqrt(p[0]);
  });
  add_fn(m, "exp", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "exp");
    return map_real(p[0], "exp", [](double d) { return std::exp(d); });
  });
  add_fn(m, "log", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "log");
    return map_real(p[0], "log", [](double d) { return std::log(d); }, [](double d) { return !(d < 0); });
  });
  add_fn(m, "abs", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "abs");
    const auto& a = numeric_arg(p[0], "abs");
    if (kind_of(a.type()) == Kind::Float) return map_real(p[0], "abs", [](double d) { return std::fabs(d); });
    if (kind_of(a.type()) == Kind::Complex) throw EvalError("MethodError: abs of complex numbers is not supported");
    auto zero = make(TypedArray::scalar(std::int64_t{0}));
    auto neg = arith('-', zero, p[0]);
    auto pos = arith('+', zero, p[0]);
    auto& out = pos->as<TypedArray>().as<std::int64_t>();
    const auto& nv = neg->as<TypedArray>().as<std::int64_t>();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], nv[i]);
    return pos;
  });
  add_fn(m, "sum", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "sum");
    return builtin_sum(p[0]);
  });
  add_fn(m, "vcat", [](CallContext&, const Positional& p, const Named& n) {
    if (!n.empty()) throw EvalError("MethodError: vcat does not accept keyword arguments");
    return vcat(p);
  });
  add_fn(m, "identity", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "identity");
    return p[0];
  });
  add_fn(m, "typeof", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "typeof");
    return make(TypedArray::scalar(type_name(*p[0])));
  });
  static constexpr std::pair<const char*, char> kOps[] = {{"add", '+'}, {"sub", '-'}, {"mul", '*'}, {"div", '/'}};
  for (const auto& [name, op] : kOps) {
    add_fn(m, name, [name = std::string(name), op = op](CallContext&, const Positional& p, const Named& n) {
      expect_arity(p, n, 2, name);
      return arith(op, p[0], p[1]);
    });
  }
  add_fn(m, "print", [](CallContext& ctx, const Positional& p, const Named&) {
    std::string s;
    for (const auto& x : p) s += display_string(*x);
    if (!s.empty()) ctx.emit(Channel::Out, std::move(s));
    return make(Null{});
  });
  add_fn(m, "println", [](CallContext& ctx, const Positional& p, const Named&) {
    std::string s;
    for (const auto& x : p) s += display_string(*x);
    ctx.emit(Channel::Out, s + "\n");
    return make(Null{});
  });
  add_fn(m, "warn", [](CallContext& ctx, const Positional& p, const Named&) {
    std::string s;
    for (const auto& x : p) s += display_string(*x);
    ctx.emit(Channel::Err, "Warning: " + s + "\n");
    return make(Null{});
  });
  add_fn(m, "error", [](CallContext&, const Positional& p, const Named&) -> ObjectPtr {
    std::string s;
    for (const auto& x : p) s += display_string(*x);
    throw EvalError(s);
  });
  add_fn(m, "spin", [](CallContext& ctx, const Positional&, const Named&) -> ObjectPtr {
    while (!ctx.cancelled()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    throw Cancelled();
  });
  add_fn(m, "maketable", [](CallContext&, const Positional& p, const Named& n) { return builtin_maketable(p, n); });
  add_fn(m, "select", [](CallContext&, const Positional& p, const Named& n) {
    if (!n.empty()) throw EvalError("MethodError: select does not accept keyword arguments");
    return builtin_select(p);
  });
  auto field = [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 2, "getfield");
    return get_field(p[0], string_arg(p[1], "getfield"));
  };
  add_fn(m, "column", field);
  add_fn(m, "getfield", field);
  add_fn(m, "length", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "length");
    return builtin_length(p[0]);
  });
  add_fn(m, "argmax", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "argmax");
    return builtin_argmax(p[0]);
  });
  add_fn(m, "registrysize", [](CallContext& ctx, const Positional& p, const Named& n) {
    expect_arity(p, n, 0, "registrysize");
    return make(TypedArray::scalar(static_cast<std::int64_t>(ctx.registry_size())));
  });
  add_fn(m, "box", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "box");
    return make(StructObj{"Base.Box", {{"contents", p[0]}}, true});
  });
  add_fn(m, "setbox", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 2, "setbox");
    auto* s = std::get_if<StructObj>(&p[0]->v);
    if (!s || !s->mutable_fields) throw EvalError(fmt::format("MethodError: setbox expects a Base.Box, got {}", type_name(*p[0])));
    s->fields[0].value = p[1];
    return p[1];
  });
  add_fn(m, "resource", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "resource");
    return make(ResourceObj{string_arg(p[0], "resource")});
  });

  for (auto t : {ElemType::F64, ElemType::F32, ElemType::I64, ElemType::I32, ElemType::I16, ElemType::I8,
                 ElemType::U8, ElemType::Bool, ElemType::String, ElemType::C128, ElemType::C64})
    add_type(m, TypeConstructor::primitive("Base." + std::string(elem_type_name(t)), t));
  m.add("NaN", {EntityKind::Value, make(TypedArray::scalar(std::numeric_limits<double>::quiet_NaN())), true});
  m.add("Inf", {EntityKind::Value, make(TypedArray::scalar(std::numeric_limits<double>::infinity())), true});
  return m;
}

Module make_library_module() {
  Module m{"Library", {}};
  add_type(m, TypeConstructor::structure("Library.Book", {{"author", ElemType::String},
                                                          {"title", ElemType::String},
                                                          {"year", ElemType::I64}}));
  add_fn(m, "cite", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "cite");
    const auto* s = p[0]->get_if<StructObj>();
    if (!s || s->type_name != "Library.Book")
      throw EvalError(fmt::format("MethodError: no method matching cite(::{})", type_name(*p[0])));
    auto author = string_arg(get_field(p[0], "author"), "cite");
    auto title = string_arg(get_field(p[0], "title"), "cite");
    auto year = display_string(*get_field(p[0], "year"));
    return make(TypedArray::scalar(fmt::format("{}: {} ({})", author, title, year)));
  });
  add_fn(
      m, "normalize_title",
      [](CallContext&, const Positional& p, const Named& n) {
        expect_arity(p, n, 1, "normalize_title");
        auto s = string_arg(p[0], "normalize_title");
        auto b = s.find_first_not_of(' ');
        auto e = s.find_last_not_of(' ');
        return make(TypedArray::scalar(b == std::string::npos ? std::string() : s.substr(b, e - b + 1)));
      },
      false);
  return m;
}

Module make_activations_module() {
  Module m{"Activations", {}};
  add_fn(m, "σ", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "σ");
    return map_real(p[0], "σ", [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  });
  add_fn(m, "logσ", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "logσ");
    return map_real(p[0], "logσ", [](double x) { return x < 0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x)); });
  });
  add_fn(m, "relu", [](CallContext&, const Positional& p, const Named& n) {
    expect_arity(p, n, 1, "relu");
    return map_real(p[0], "relu", [](double x) { return x > 0 ? x : 0.0; });
  });
  return m;
}

ModuleTable default_modules() {
  ModuleTable t;
  t.add(make_base_module());
  t.add(make_library_module());
  t.add(make_activations_module());
  return t;
}

}  // namespace bridgewire::rt
