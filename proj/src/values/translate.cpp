#include "bridgewire/translate.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <limits>

namespace bridgewire {

namespace {

constexpr std::array kBoxed = {
    BoxedPrimitive{"Float16", ElemType::F64, 0},
    BoxedPrimitive{"UInt32", ElemType::F64, 0},
    BoxedPrimitive{"UInt16", ElemType::I32, 0},
    BoxedPrimitive{"Char", ElemType::I32, 0},
    BoxedPrimitive{"UInt64", ElemType::U8, 8},
    BoxedPrimitive{"Int128", ElemType::U8, 16},
    BoxedPrimitive{"UInt128", ElemType::U8, 16},
    BoxedPrimitive{"Ptr", ElemType::U8, 8},
    BoxedPrimitive{"Complex{Int64}", ElemType::C128, 0},
    BoxedPrimitive{"Complex{Int32}", ElemType::C128, 0},
    BoxedPrimitive{"Complex{Int16}", ElemType::C128, 0},
    BoxedPrimitive{"Complex{Int8}", ElemType::C128, 0},
    BoxedPrimitive{"Complex{Float16}", ElemType::C128, 0},
};

std::vector<std::int64_t> outbound_dims(const HostVector& v) {
  if (v.dim()) return *v.dim();
  if (v.size() == 1) return {};
  return {static_cast<std::int64_t>(v.size())};
}

template <class To, class From>
std::vector<To> convert_all(const std::vector<From>& in, const HostVector& v, std::string_view type) {
  std::vector<To> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (v.is_na(i)) {
      out.push_back(To{});
      continue;
    }
    const auto x = in[i];
    if constexpr (std::is_integral_v<To>) {
      if constexpr (std::is_floating_point_v<From>) {
        if (!std::isfinite(x) || std::trunc(x) != x || x < -9223372036854775808.0 ||
            x >= 9223372036854775808.0)
          throw TranslationError(fmt::format("element {} ({}) is not representable as {}", i + 1, x, type));
      } else {
        if (x < std::numeric_limits<To>::min() || x > std::numeric_limits<To>::max())
          throw TranslationError(fmt::format("element {} ({}) is out of range for {}", i + 1, x, type));
      }
    }
    out.push_back(static_cast<To>(x));
  }
  return out;
}

TypedArray with_missing(TypedArray a, const HostVector& v) {
  if (v.has_na_mask()) {
    a.ensure_bitmap();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v.is_na(i)) a.set_missing(i);
  }
  return a;
}

Value boxed(std::string_view name, TypedArray carrier) {
  Struct s;
  s.type_name = std::string(name);
  s.fields.push_back({std::string(kBoxedField), std::move(carrier)});
  return s;
}

[[noreturn]] void bad_attr(const HostVector& v) {
  throw TranslationError(fmt::format("type attribute '{}' is not supported for {} vectors",
                                     *v.type_attr(), host_type_name(v.type())));
}

}  // namespace

const BoxedPrimitive* find_boxed_primitive(std::string_view type_name) {
  for (const auto& b : kBoxed)
    if (b.type_name == type_name) return &b;
  return nullptr;
}

Value vector_outbound(const HostVector& v) {
  auto dims = outbound_dims(v);
  const auto& attr = v.type_attr();
  auto make = [&](auto data) { return with_missing(TypedArray(std::move(data), dims), v); };

  switch (v.type()) {
    case HostType::Integer: {
      const auto& d = v.as<std::int32_t>();
      if (!attr || *attr == "Int32") return make(d);
      if (*attr == "Int64") return make(convert_all<std::int64_t>(d, v, *attr));
      if (*attr == "Int16") return make(convert_all<std::int16_t>(d, v, *attr));
      if (*attr == "Int8") return make(convert_all<std::int8_t>(d, v, *attr));
      if (*attr == "UInt16" || *attr == "Char") return boxed(*attr, make(d));
      bad_attr(v);
    }
    case HostType::Double: {
      const auto& d = v.as<double>();
      if (!attr || *attr == "Float64") return make(d);
      if (*attr == "Float32") return make(convert_all<float>(d, v, *attr));
      if (*attr == "Int64") return make(convert_all<std::int64_t>(d, v, *attr));
      if (*attr == "Float16" || *attr == "UInt32") return boxed(*attr, make(d));
      bad_attr(v);
    }
    case HostType::Logical:
      if (attr && *attr != "Bool") bad_attr(v);
      return make(v.as<Bool>());
    case HostType::Character:
      if (attr && *attr != "String") bad_attr(v);
      return make(v.as<std::string>());
    case HostType::Complex: {
      const auto& d = v.as<std::complex<double>>();
      if (!attr || *attr == "Complex{Float64}") return make(d);
      if (*attr == "Complex{Float32}") return make(convert_all<std::complex<float>>(d, v, *attr));
      if (const auto* b = find_boxed_primitive(*attr); b && b->carrier == ElemType::C128)
        return boxed(*attr, make(d));
      bad_attr(v);
    }
    case HostType::Raw: {
      const auto& d = v.as<std::uint8_t>();
      if (!attr || *attr == "UInt8") return make(d);
      if (const auto* b = find_boxed_primitive(*attr); b && b->carrier == ElemType::U8) {
        if (d.size() % b->width != 0)
          throw TranslationError(fmt::format("{} raw bytes cannot hold whole {} values", d.size(), *attr));
        return boxed(*attr, make(d));
      }
      bad_attr(v);
    }
  }
  throw TranslationError("unsupported host vector");
}

HostVector array_inbound(const TypedArray& a) {
  std::optional<std::string> attr;
  HostVector::Data data = std::visit(
      [&attr, &a](const auto& v) -> HostVector::Data {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, double>) {
          return v;
        } else if constexpr (std::is_same_v<T, float>) {
          attr = "Float32";
          return std::vector<double>(v.begin(), v.end());
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          bool fits = true;
          for (std::size_t i = 0; i < v.size() && fits; ++i)
            fits = a.is_missing(i) || (v[i] >= std::numeric_limits<std::int32_t>::min() &&
                                       v[i] <= std::numeric_limits<std::int32_t>::max());
          if (fits) return std::vector<std::int32_t>(v.begin(), v.end());
          attr = "Int64";
          std::vector<double> d;
          d.reserve(v.size());
          for (auto x : v) d.push_back(static_cast<double>(x));
          return d;
        } else if constexpr (std::is_same_v<T, std::int32_t> || std::is_same_v<T, std::int16_t> ||
                             std::is_same_v<T, std::int8_t>) {
          attr = std::string(elem_type_name(a.type()));
          return std::vector<std::int32_t>(v.begin(), v.end());
        } else if constexpr (std::is_same_v<T, std::uint8_t> || std::is_same_v<T, Bool> ||
                             std::is_same_v<T, std::string> ||
                             std::is_same_v<T, std::complex<double>>) {
          return v;
        } else {
          static_assert(std::is_same_v<T, std::complex<float>>);
          attr = "Complex{Float32}";
          return std::vector<std::complex<double>>(v.begin(), v.end());
        }
      },
      a.data());
  HostVector h(std::move(data));
  if (a.has_missing_bitmap()) {
    h.ensure_na_mask();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.is_missing(i)) h.set_na(i);
  }
  if (a.ndims() >= 2 || (a.ndims() == 1 && a.size() == 1)) h.set_dim(a.dims());
  h.set_type_attr(std::move(attr));
  return h;
}

namespace {

std::optional<HostVector> unbox(const Struct& s) {
  const auto* b = find_boxed_primitive(s.type_name);
  if (!b || s.fields.size() != 1 || s.fields[0].name != kBoxedField) return std::nullopt;
  const auto* carrier = s.fields[0].value.get_if<TypedArray>();
  if (!carrier || carrier->type() != b->carrier) return std::nullopt;
  HostVector h = array_inbound(*carrier);
  h.set_type_attr(s.type_name);
  return h;
}

}  // namespace

Value translate_outbound(const HostValue& v, const OutboundHooks& hooks) {
  return std::visit(
      [&hooks](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, HostNull>) {
          return Null{};
        } else if constexpr (std::is_same_v<T, HostVector>) {
          return vector_outbound(x);
        } else if constexpr (std::is_same_v<T, HostList>) {
          List l;
          l.items.reserve(x.items.size());
          for (const auto& item : x.items) l.items.push_back(translate_outbound(item, hooks));
          return l;
        } else if constexpr (std::is_same_v<T, HostRecord>) {
          std::vector<Field> fields;
          fields.reserve(x.fields.size());
          for (const auto& f : x.fields) fields.push_back({f.name, translate_outbound(f.value, hooks)});
          Value out = x.type_attr ? Value(Struct{*x.type_attr, std::move(fields)})
                                  : Value(NamedList{std::move(fields)});
          try {
            validate(out);
          } catch (const ValueError& e) {
            throw TranslationError(e.what());
          }
          return out;
        } else if constexpr (std::is_same_v<T, HostTable>) {
          Table t;
          for (const auto& [name, col] : x.columns) {
            if (col.dim() && col.dim()->size() > 1)
              throw TranslationError(fmt::format("table column '{}' is not a vector", name));
            if (!t.columns.empty() && col.size() != t.rows())
              throw TranslationError(fmt::format("table column '{}' has a different length", name));
            Value c = vector_outbound(col);
            if (!c.is<TypedArray>())
              throw TranslationError(fmt::format("table column '{}' has a boxed type", name));
            auto arr = std::move(c.as<TypedArray>());
            arr.reshape({static_cast<std::int64_t>(arr.size())});
            t.columns.push_back({name, std::move(arr)});
          }
          return t;
        } else if constexpr (std::is_same_v<T, HostFunction>) {
          if (!hooks.callback) throw TranslationError("host functions need a session to be sent");
          return FnRef::callback(hooks.callback(x));
        } else if constexpr (std::is_same_v<T, RemoteFunction>) {
          return FnRef{x.kind, x.name, 0};
        } else {
          if (!hooks.proxy) throw TranslationError("proxies need a session to be sent");
          return hooks.proxy(x);
        }
      },
      v.variant());
}

HostValue translate_inbound(const Value& v, const InboundHooks& hooks) {
  return std::visit(
      [&hooks](const auto& x) -> HostValue {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          return HostNull{};
        } else if constexpr (std::is_same_v<T, TypedArray>) {
          return array_inbound(x);
        } else if constexpr (std::is_same_v<T, List>) {
          HostList l;
          l.items.reserve(x.items.size());
          for (const auto& item : x.items) l.items.push_back(translate_inbound(item, hooks));
          return l;
        } else if constexpr (std::is_same_v<T, NamedList> || std::is_same_v<T, Struct>) {
          HostRecord r;
          const std::vector<Field>* fields;
          if constexpr (std::is_same_v<T, Struct>) {
            if (auto h = unbox(x)) return std::move(*h);
            r.type_attr = x.type_name;
            fields = &x.fields;
          } else {
            fields = &x.entries;
          }
          r.fields.reserve(fields->size());
          for (const auto& f : *fields) r.fields.push_back({f.name, translate_inbound(f.value, hooks)});
          return r;
        } else if constexpr (std::is_same_v<T, Ref>) {
          if (!hooks.proxy) throw TranslationError("references need a session to be received");
          return hooks.proxy(x);
        } else if constexpr (std::is_same_v<T, FnRef>) {
          if (x.kind == FnKind::Callback) {
            if (!hooks.callback) throw TranslationError("callbacks need a session to be received");
            return hooks.callback(x.callback_id);
          }
          return RemoteFunction{x.kind, x.name};
        } else {
          HostTable t;
          for (const auto& c : x.columns) {
            HostVector col = array_inbound(c.data);
            col.clear_dim();
            t.columns.emplace_back(c.name, std::move(col));
          }
          return t;
        }
      },
      v.variant());
}

}  // namespace bridgewire
