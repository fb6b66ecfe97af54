#pragma once

/// @file translate.hpp
/// @brief Host <-> wire translation policy.
///
/// Outbound (host to runtime):
///
///   | host       | wire element |
///   |------------|--------------|
///   | integer    | I32          |
///   | double     | F64          |
///   | logical    | BOOL         |
///   | character  | STRING       |
///   | complex    | C128         |
///   | raw        | U8           |
///
/// Inbound (runtime to host), "+ attr" meaning the remote type name is kept
/// on the host value:
///
///   | remote                           | host                 |
///   |----------------------------------|----------------------|
///   | Float64                          | double               |
///   | Float16, Float32, UInt32         | double + attr        |
///   | Int64 fitting in 32 bits         | integer              |
///   | Int64 not fitting in 32 bits     | double + attr        |
///   | Int8, Int16, UInt16, Int32, Char | integer + attr       |
///   | UInt8                            | raw                  |
///   | UInt64, Int128, UInt128, Ptr     | raw + attr           |
///   | Complex{Float64}                 | complex              |
///   | Complex{Int*}, Complex{Float32}, | complex + attr       |
///   | Complex{Float16}                 |                      |
///   | String                           | character            |
///   | Bool                             | logical              |
///
/// Remote types without an element code of their own travel as a boxed
/// primitive: a STRUCT named after the type with a single field "data"
/// holding the carrier array.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "bridgewire/host_value.hpp"
#include "bridgewire/value.hpp"

namespace bridgewire {

class TranslationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hooks for the parts of a host value that need session state.
struct OutboundHooks {
  std::function<Ref(const Proxy&)> proxy;
  std::function<std::uint64_t(const HostFunction&)> callback;
};

struct InboundHooks {
  std::function<HostValue(const Ref&)> proxy;
  std::function<HostValue(std::uint64_t)> callback;
};

Value translate_outbound(const HostValue& v, const OutboundHooks& hooks = {});
HostValue translate_inbound(const Value& v, const InboundHooks& hooks = {});

/// Host vector to typed array; honors the vector's type attribute.
Value vector_outbound(const HostVector& v);
/// Typed array to host vector, attaching a type attribute where needed.
HostVector array_inbound(const TypedArray& a);

struct BoxedPrimitive {
  std::string_view type_name;
  ElemType carrier;
  std::size_t width;  // bytes per element when the carrier is raw bytes, else 0
};

/// Looks up a remote primitive type that travels boxed, e.g. "UInt32".
const BoxedPrimitive* find_boxed_primitive(std::string_view type_name);
inline constexpr std::string_view kBoxedField = "data";

}  // namespace bridgewire
