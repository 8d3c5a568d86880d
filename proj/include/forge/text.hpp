#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "forge/error.hpp"

namespace forge::text {

struct DecodedText {
  std::u32string code_points;
  bool lossy = false;
};

inline constexpr char32_t kReplacementChar = 0xFFFD;

namespace detail {

// Decodes one scalar value starting at `i`; returns the consumed length, or 0
// when the sequence is malformed (overlong, surrogate, truncated, > U+10FFFF).
inline std::size_t decode_one(std::string_view s, std::size_t i, char32_t& out) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    out = b0;
    return 1;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  out = cp;
  return len;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace detail

/// UTF-8 to Unicode scalar values. Malformed bytes become U+FFFD, one per byte.
inline DecodedText decode_utf8(std::string_view s) {
  DecodedText out;
  out.code_points.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    char32_t cp = 0;
    const std::size_t n = detail::decode_one(s, i, cp);
    if (n == 0) {
      out.code_points.push_back(kReplacementChar);
      out.lossy = true;
      ++i;
    } else {
      out.code_points.push_back(cp);
      i += n;
    }
  }
  return out;
}

inline std::string encode_utf8(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) detail::append_utf8(out, cp);
  return out;
}

struct SanitizedText {
  std::string text;
  bool lossy = false;
};

/// Returns valid UTF-8, replacing malformed bytes; `lossy` records whether
/// anything was replaced.
inline SanitizedText sanitize_utf8(std::string_view bytes) {
  SanitizedText out;
  out.text.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    char32_t cp = 0;
    const std::size_t n = detail::decode_one(bytes, i, cp);
    if (n == 0) {
      detail::append_utf8(out.text, kReplacementChar);
      out.lossy = true;
      ++i;
    } else {
      out.text.append(bytes.substr(i, n));
      i += n;
    }
  }
  return out;
}

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

/// Identifier-ish bytes: ASCII alnum, underscore, and any non-ASCII byte.
inline bool is_word_byte(unsigned char c) noexcept {
  return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

inline bool is_space_byte(unsigned char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Token&, const Token&) = default;
};

/// Splits on non-alphanumeric boundaries: word runs are one token, every other
/// non-space byte is a token of its own, whitespace is dropped.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_space_byte(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
      tokens.push_back({i, j});
      i = j;
    } else {
      tokens.push_back({i, i + 1});
      ++i;
    }
  }
  return tokens;
}

inline std::vector<std::string_view> token_views(std::string_view s) {
  std::vector<std::string_view> out;
  for (const Token& t : tokenize(s)) out.push_back(s.substr(t.begin, t.size()));
  return out;
}

/// Lines split on '\n'. A trailing newline does not produce an empty last line.
inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < s.size()) {
    const std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline std::string_view rtrim(std::string_view s) {
  std::size_t n = s.size();
  while (n > 0 && is_space_byte(static_cast<unsigned char>(s[n - 1]))) --n;
  return s.substr(0, n);
}

inline std::string_view trim(std::string_view s) {
  s = rtrim(s);
  std::size_t i = 0;
  while (i < s.size() && is_space_byte(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Lower-cased extension without the dot; empty when there is none.
inline std::string extension_of(std::string_view path) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash)) return {};
  return to_lower(path.substr(dot + 1));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableSource, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::UnreadableSource, "read error on " + path.string());
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace forge::text
