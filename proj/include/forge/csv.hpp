#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

namespace forge::csv {

/// RFC 4180 quoting: fields with a comma, quote, CR or LF are wrapped in quotes.
inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Shortest round-trip representation; empty for NaN so spreadsheets read a blank.
inline std::string number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return {};
  return std::string(buf, end);
}

inline std::string number(std::uint64_t v) { return std::to_string(v); }

class RowWriter {
 public:
  explicit RowWriter(std::string& sink) : sink_(sink) {}

  RowWriter& field(std::string_view v) {
    separate();
    sink_ += escape(v);
    return *this;
  }
  // Literals would otherwise bind to the bool overload.
  RowWriter& field(const char* v) { return field(std::string_view(v)); }
  RowWriter& field(const std::string& v) { return field(std::string_view(v)); }
  RowWriter& field(double v) {
    separate();
    sink_ += number(v);
    return *this;
  }
  RowWriter& field(std::uint64_t v) {
    separate();
    sink_ += number(v);
    return *this;
  }
  RowWriter& field(bool v) { return field(std::string_view(v ? "true" : "false")); }
  void end() {
    sink_ += '\n';
    first_ = true;
  }

 private:
  void separate() {
    if (!first_) sink_ += ',';
    first_ = false;
  }

  std::string& sink_;
  bool first_ = true;
};

}  // namespace forge::csv
