#pragma once

/// @file text_baseline.hpp
/// @brief JSON-style text encoding of data values, the benchmark baseline.
///
/// Numbers travel as shortest round-trip decimals, missing elements as the
/// token null, non-finite floats as the strings "NaN", "Inf" and "-Inf".
/// Arrays carry their element type and dims. REF and FNREF are rejected.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bridgewire/value.hpp"

namespace bridgewire::conformance {

class TextFormatError : public std::runtime_error {
 public:
  TextFormatError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Throws TextFormatError for REF and FNREF.
std::string to_text(const Value& v);
void to_text(const Value& v, std::string& out);
/// Single pass; array storage is allocated once from the dims header.
Value from_text(std::string_view text);

Value text_roundtrip(const Value& v);

/// Structural equality where floats may differ by `max_ulps` units in the
/// last place; NaN matches NaN regardless of payload.
bool approx_equal(const Value& a, const Value& b, std::uint64_t max_ulps = 1);

}  // namespace bridgewire::conformance
