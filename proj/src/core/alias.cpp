#include "bridgewire/alias.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>

namespace bridgewire {

std::optional<std::size_t> find_invalid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    unsigned char c = p[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    char32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > n) return i;
    for (std::size_t k = 1; k < len; ++k) {
      if ((p[i + k] & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (p[i + k] & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return i;
    i += len;
  }
  return std::nullopt;
}

std::vector<char32_t> utf8_codepoints(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = p[i];
    std::size_t len = c < 0x80 ? 1 : (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : 4;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (std::size_t k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (p[i + k] & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

namespace {

bool ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool ascii_digit(char c) { return c >= '0' && c <= '9'; }

struct NamedChar {
  char32_t cp;
  std::string_view name;
};

// LaTeX-style names as used for tab completion in the modeled language.
constexpr std::array kNamedChars = {
    NamedChar{0x0391, "Alpha"},   NamedChar{0x0392, "Beta"},     NamedChar{0x0393, "Gamma"},
    NamedChar{0x0394, "Delta"},   NamedChar{0x0395, "Epsilon"},  NamedChar{0x0396, "Zeta"},
    NamedChar{0x0397, "Eta"},     NamedChar{0x0398, "Theta"},    NamedChar{0x0399, "Iota"},
    NamedChar{0x039A, "Kappa"},   NamedChar{0x039B, "Lambda"},   NamedChar{0x039C, "Mu"},
    NamedChar{0x039D, "Nu"},      NamedChar{0x039E, "Xi"},       NamedChar{0x039F, "Omicron"},
    NamedChar{0x03A0, "Pi"},      NamedChar{0x03A1, "Rho"},      NamedChar{0x03A3, "Sigma"},
    NamedChar{0x03A4, "Tau"},     NamedChar{0x03A5, "Upsilon"},  NamedChar{0x03A6, "Phi"},
    NamedChar{0x03A7, "Chi"},     NamedChar{0x03A8, "Psi"},      NamedChar{0x03A9, "Omega"},
    NamedChar{0x03B1, "alpha"},   NamedChar{0x03B2, "beta"},     NamedChar{0x03B3, "gamma"},
    NamedChar{0x03B4, "delta"},   NamedChar{0x03B5, "varepsilon"}, NamedChar{0x03B6, "zeta"},
    NamedChar{0x03B7, "eta"},     NamedChar{0x03B8, "theta"},    NamedChar{0x03B9, "iota"},
    NamedChar{0x03BA, "kappa"},   NamedChar{0x03BB, "lambda"},   NamedChar{0x03BC, "mu"},
    NamedChar{0x03BD, "nu"},      NamedChar{0x03BE, "xi"},       NamedChar{0x03BF, "omicron"},
    NamedChar{0x03C0, "pi"},      NamedChar{0x03C1, "rho"},      NamedChar{0x03C2, "varsigma"},
    NamedChar{0x03C3, "sigma"},   NamedChar{0x03C4, "tau"},      NamedChar{0x03C5, "upsilon"},
    NamedChar{0x03C6, "varphi"},  NamedChar{0x03C7, "chi"},      NamedChar{0x03C8, "psi"},
    NamedChar{0x03C9, "omega"},   NamedChar{0x03D1, "vartheta"}, NamedChar{0x03D5, "phi"},
    NamedChar{0x03F5, "epsilon"}, NamedChar{0x2202, "partial"},  NamedChar{0x2207, "nabla"},
    NamedChar{0x221E, "infty"},
};

static_assert(std::is_sorted(kNamedChars.begin(), kNamedChars.end(),
                             [](const NamedChar& a, const NamedChar& b) { return a.cp < b.cp; }));

}  // namespace

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_valid_utf8(s)) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto c = s[i];
    if (static_cast<unsigned char>(c) >= 0x80) continue;
    if (ascii_letter(c) || c == '_') continue;
    if (i > 0 && (ascii_digit(c) || c == '!')) continue;
    return false;
  }
  return true;
}

std::string ascii_alias(std::string_view name) {
  if (std::all_of(name.begin(), name.end(),
                  [](char c) { return static_cast<unsigned char>(c) < 0x80; }))
    return std::string(name);
  std::string out;
  for (char32_t cp : utf8_codepoints(name)) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
      continue;
    }
    auto it = std::lower_bound(kNamedChars.begin(), kNamedChars.end(), cp,
                               [](const NamedChar& e, char32_t c) { return e.cp < c; });
    if (it != kNamedChars.end() && it->cp == cp)
      out += fmt::format("<{}>", it->name);
    else
      out += fmt::format("<u{:04x}>", static_cast<std::uint32_t>(cp));
  }
  return out;
}

}  // namespace bridgewire
