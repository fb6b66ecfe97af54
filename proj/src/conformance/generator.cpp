#include "bridgewire/conformance/generator.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace bridgewire::conformance {

namespace {

constexpr std::string_view kPieces[] = {"a", "Z", "0", " ", "\"", "\\", "\n", "é", "σ", "日本", "😀", "", "x_y", "{}"};
constexpr std::string_view kFunctionNames[] = {"Base.sqrt", "Base.map", "Library.cite", "Activations.σ"};

}  // namespace

ValueGenerator::ValueGenerator(GeneratorConfig config)
    : config_(config),
      rng_(config.seed),
      elem_dist_(config.elem_weights.begin(), config.elem_weights.end()) {}

Value ValueGenerator::next() { return gen(config_.max_depth); }

ElemType ValueGenerator::random_elem_type() { return static_cast<ElemType>(elem_dist_(rng_) + 1); }

std::string ValueGenerator::random_string() {
  std::string s;
  const std::size_t n = below(5);
  for (std::size_t i = 0; i < n; ++i) s += kPieces[below(std::size(kPieces))];
  return s;
}

std::string ValueGenerator::random_name(bool allow_empty) {
  if (allow_empty && chance(0.05)) return {};
  static constexpr std::string_view kStems[] = {"x", "y", "data", "σ", "col", "a_b", "Δt"};
  return fmt::format("{}{}", kStems[below(std::size(kStems))], below(100));
}

TypedArray ValueGenerator::array(ElemType type, std::vector<std::int64_t> dims) {
  TypedArray a = TypedArray::zeros(type, std::move(dims));
  std::visit(
      [&](auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        for (auto& x : v) {
          if constexpr (std::is_same_v<T, Bool>) {
            x = to_bool(chance(0.5));
          } else if constexpr (std::is_same_v<T, std::string>) {
            x = random_string();
          } else if constexpr (std::is_integral_v<T>) {
            // Bias towards the edges of the range.
            switch (below(4)) {
              case 0: x = std::numeric_limits<T>::min(); break;
              case 1: x = std::numeric_limits<T>::max(); break;
              default: x = static_cast<T>(rng_());
            }
          } else if constexpr (std::is_floating_point_v<T>) {
            switch (below(8)) {
              case 0: x = std::numeric_limits<T>::quiet_NaN(); break;
              case 1: x = std::numeric_limits<T>::infinity() * (chance(0.5) ? 1 : -1); break;
              case 2: x = static_cast<T>(-0.0); break;
              case 3: x = std::numeric_limits<T>::denorm_min(); break;
              case 4: {
                // Arbitrary bit pattern, NaN payloads included.
                using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
                x = std::bit_cast<T>(static_cast<Bits>(rng_()));
                break;
              }
              default: x = static_cast<T>(std::uniform_real_distribution<double>(-1e6, 1e6)(rng_));
            }
          } else {
            using R = typename T::value_type;
            std::uniform_real_distribution<double> d(-1e3, 1e3);
            x = T(static_cast<R>(d(rng_)), static_cast<R>(d(rng_)));
          }
        }
      },
      a.data());
  if (chance(config_.bitmap_probability)) {
    a.ensure_bitmap();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (chance(config_.missing_probability)) a.set_missing(i);
  }
  return a;
}

TypedArray ValueGenerator::random_array(bool one_dimensional) {
  const ElemType t = random_elem_type();
  const std::size_t max_len = config_.max_array_length;
  std::vector<std::int64_t> dims;
  const std::size_t nd = one_dimensional ? 1 : below(4);  // scalar .. 3-d
  std::size_t budget = max_len;
  for (std::size_t i = 0; i < nd; ++i) {
    const auto d = static_cast<std::int64_t>(below(budget + 1));
    dims.push_back(d);
    budget = d == 0 ? budget : std::max<std::size_t>(1, budget / static_cast<std::size_t>(d));
  }
  return array(t, std::move(dims));
}

Value ValueGenerator::gen(std::size_t depth_left) {
  std::vector<Tag> tags = {Tag::Null, Tag::Array, Tag::Table};
  if (config_.include_references) {
    tags.push_back(Tag::Ref);
    tags.push_back(Tag::FnRef);
  }
  if (depth_left > 0) {
    tags.push_back(Tag::List);
    tags.push_back(Tag::NamedList);
    tags.push_back(Tag::Struct);
  }
  // Arrays dominate real traffic.
  const Tag tag = chance(0.3) ? Tag::Array : tags[below(tags.size())];
  const std::size_t width = std::min<std::size_t>(config_.max_array_length, 5);
  switch (tag) {
    case Tag::Null: return Null{};
    case Tag::Array: return random_array(false);
    case Tag::List: {
      List l;
      const std::size_t n = below(width + 1);
      for (std::size_t i = 0; i < n; ++i) l.items.push_back(gen(depth_left - 1));
      return l;
    }
    case Tag::NamedList:
    case Tag::Struct: {
      const bool is_struct = tag == Tag::Struct;
      std::vector<Field> fields;
      std::unordered_set<std::string> seen;
      const std::size_t n = below(width + 1) + (is_struct ? 1 : 0);
      for (std::size_t i = 0; i < n; ++i) {
        auto name = random_name(!is_struct);
        if (!seen.insert(name).second) continue;
        fields.push_back({std::move(name), gen(depth_left - 1)});
      }
      if (!is_struct) return NamedList{std::move(fields)};
      return Struct{config_.type_names[below(config_.type_names.size())], std::move(fields)};
    }
    case Tag::Ref:
      return Ref{2 * (rng_() >> 2) + 2, config_.type_names[below(config_.type_names.size())]};
    case Tag::FnRef:
      switch (below(3)) {
        case 0: return FnRef::named(std::string(kFunctionNames[below(std::size(kFunctionNames))]));
        case 1: return FnRef::callback(2 * (rng_() >> 2) + 1);
        default: return FnRef::type_constructor(config_.type_names[below(config_.type_names.size())]);
      }
    case Tag::Table: {
      Table t;
      const std::size_t cols = below(4);
      const auto rows = static_cast<std::int64_t>(below(config_.max_array_length + 1));
      std::unordered_set<std::string> seen;
      for (std::size_t i = 0; i < cols; ++i) {
        auto name = random_name(false);
        if (!seen.insert(name).second) continue;
        t.columns.push_back({std::move(name), array(random_elem_type(), {rows})});
      }
      return t;
    }
  }
  return Null{};
}

}  // namespace bridgewire::conformance
