#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cocrf/error.hpp"

namespace cocrf::detail {

// Shortest decimal text that parses back to the identical double.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void append_reals(std::string& out, std::span<const double> values) {
  for (double v : values) {
    out += ' ';
    out += format_real(v);
  }
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

inline std::optional<double> try_parse_real(std::string_view tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> try_parse_int(std::string_view tok) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

/// Line reader that skips blank lines and '#' comments while tracking the
/// 1-based physical line number for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, buffer_)) {
      ++line_;
      std::string_view view(buffer_);
      auto first = view.find_first_not_of(" \t\r");
      if (first == std::string_view::npos || view[first] == '#') continue;
      tokens = split_ws(view);
      return true;
    }
    return false;
  }

  int line() const noexcept { return line_; }

  std::vector<std::string_view> expect(Errc code, std::string_view what) {
    std::vector<std::string_view> tokens;
    if (!next(tokens)) throw Error(code, "unexpected end of input, expected " + std::string(what), line_ + 1);
    return tokens;
  }

  double real(std::string_view tok, Errc code = Errc::MalformedRecord) const {
    auto v = try_parse_real(tok);
    if (!v) throw Error(code, "expected a real number, got '" + std::string(tok) + "'", line_);
    return *v;
  }

  std::int64_t integer(std::string_view tok, Errc code = Errc::MalformedRecord) const {
    auto v = try_parse_int(tok);
    if (!v) throw Error(code, "expected an integer, got '" + std::string(tok) + "'", line_);
    return *v;
  }

 private:
  std::istream& in_;
  std::string buffer_;
  int line_ = 0;
};

}  // namespace cocrf::detail
