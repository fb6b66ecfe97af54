#pragma once

/// @file golden.hpp
/// @brief Golden byte vectors pinning the wire format.
///
/// Each case is built in code; its expected bytes live in `<dir>/<name>.hex`
/// as a `# description` line followed by whitespace-separated hex.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bridgewire/wire.hpp"

namespace bridgewire::conformance {

struct GoldenCase {
  std::string name;
  std::string description;
  std::variant<Value, Frame> item;
};

const std::vector<GoldenCase>& golden_cases();

std::vector<std::uint8_t> encode_case(const GoldenCase& c);

struct GoldenFile {
  std::string description;
  std::vector<std::uint8_t> bytes;
};

/// Throws std::runtime_error on unreadable files or malformed hex.
GoldenFile read_golden_file(const std::filesystem::path& path);
std::string format_golden_file(std::string_view description, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> parse_hex(std::string_view text);
std::string to_hex(const std::vector<std::uint8_t>& bytes);

struct GoldenCheck {
  std::string name;
  bool ok = false;
  std::string message;
};

/// Checks encode == file bytes and decode(file bytes) == case, per case.
std::vector<GoldenCheck> check_golden_dir(const std::filesystem::path& dir);

}  // namespace bridgewire::conformance
