#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bridgewire {

/// Returns the byte offset of the first invalid UTF-8 sequence, or nullopt.
std::optional<std::size_t> find_invalid_utf8(std::string_view s);
inline bool is_valid_utf8(std::string_view s) { return !find_invalid_utf8(s).has_value(); }

/// Decodes valid UTF-8 into code points. Behavior on invalid input is unspecified.
std::vector<char32_t> utf8_codepoints(std::string_view s);

/// Identifier: a letter, '_' or any non-ASCII code point, followed by those,
/// digits or '!'. Must be valid UTF-8.
bool is_identifier(std::string_view s);

/// ASCII-only spelling of an identifier: each non-ASCII code point becomes
/// `<name>` from the built-in table (Greek letters, a few operators) or
/// `<uXXXX>` in lowercase hex. ASCII-only input is returned unchanged.
std::string ascii_alias(std::string_view name);

}  // namespace bridgewire
