#include "toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "potforge/error.hpp"

namespace potforge::detail {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_ws();
        const auto path = parse_key_path(']');
        expect(']');
        end_of_line();
        table = &root;
        for (const auto& part : path) {
          auto& next = (*table)[part];
          if (next.is_null()) next = nlohmann::json::object();
          if (!next.is_object()) fail(fmt::format("'{}' is not a table", part));
          table = &next;
        }
        continue;
      }
      const std::size_t key_line = line_;
      const auto path = parse_key_path('=');
      expect('=');
      skip_ws();
      nlohmann::json value = parse_value();
      end_of_line();
      nlohmann::json* target = table;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto& next = (*target)[path[i]];
        if (next.is_null()) next = nlohmann::json::object();
        if (!next.is_object()) fail(fmt::format("'{}' is not a table", path[i]));
        target = &next;
      }
      if (target->contains(path.back())) {
        throw Error(ErrorCode::kConfigInvalid,
                    fmt::format("line {}: duplicate key '{}'", key_line, path.back()));
      }
      (*target)[path.back()] = std::move(value);
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kConfigInvalid, fmt::format("line {}: {}", line_, what));
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  bool starts_with(std::string_view p) const { return s_.substr(pos_).starts_with(p); }

  char take() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(fmt::format("expected '{}'", c));
    ++pos_;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        take();
        continue;
      }
      break;
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        take();
        continue;
      }
      break;
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    take();
  }

  std::vector<std::string> parse_key_path(char terminator) {
    std::vector<std::string> parts;
    while (true) {
      skip_ws();
      if (peek() == '"') {
        ++pos_;
        parts.push_back(parse_basic_string_body());
      } else if (peek() == '\'') {
        ++pos_;
        parts.push_back(parse_literal_string_body());
      } else {
        std::string key;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                          peek() == '-')) {
          key.push_back(s_[pos_++]);
        }
        if (key.empty()) fail("expected a key");
        parts.push_back(std::move(key));
      }
      skip_ws();
      if (peek() == '.') {
        ++pos_;
        continue;
      }
      if (peek() != terminator) fail(fmt::format("expected '{}' after key", terminator));
      return parts;
    }
  }

  void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  void parse_escape(std::string& out) {
    if (eof()) fail("unterminated escape");
    const char c = s_[pos_++];
    switch (c) {
      case 'n': out.push_back('\n'); return;
      case 't': out.push_back('\t'); return;
      case 'r': out.push_back('\r'); return;
      case '"': out.push_back('"'); return;
      case '\\': out.push_back('\\'); return;
      case 'u':
      case 'U': {
        const std::size_t len = c == 'u' ? 4 : 8;
        if (pos_ + len > s_.size()) fail("short unicode escape");
        std::uint32_t cp = 0;
        const auto hex = s_.substr(pos_, len);
        const auto [p, ec] = std::from_chars(hex.data(), hex.data() + len, cp, 16);
        if (ec != std::errc{} || p != hex.data() + len) fail("bad unicode escape");
        pos_ += len;
        append_utf8(out, cp);
        return;
      }
      default: fail(fmt::format("unknown escape '\\{}'", c));
    }
  }

  std::string parse_basic_string_body() {
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        parse_escape(out);
      } else {
        out.push_back(c);
      }
    }
  }

  std::string parse_literal_string_body() {
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  std::string parse_multiline_string() {
    pos_ += 3;
    if (peek() == '\r') ++pos_;
    if (peek() == '\n') take();
    std::string out;
    while (true) {
      if (eof()) fail("unterminated multi-line string");
      if (starts_with("\"\"\"")) {
        pos_ += 3;
        return out;
      }
      const char c = take();
      if (c == '\\') {
        // line-ending backslash trims the newline and following whitespace
        if (peek() == '\n' || peek() == '\r') {
          while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) take();
          continue;
        }
        parse_escape(out);
      } else if (c != '\r') {
        out.push_back(c);
      }
    }
  }

  nlohmann::json parse_number() {
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == '_')) {
      if (peek() != '_') tok.push_back(peek());
      ++pos_;
    }
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos &&
                          !(tok.starts_with("0x") || tok.starts_with("0X"));
    const char* b = tok.data() + (tok.front() == '+' ? 1 : 0);
    const char* e = tok.data() + tok.size();
    if (is_float) {
      try {
        std::size_t used = 0;
        const double v = std::stod(std::string(b, e), &used);
        if (used == static_cast<std::size_t>(e - b)) return v;
      } catch (const std::exception&) {
      }
      fail(fmt::format("bad number '{}'", tok));
    }
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec == std::errc{} && p == e) return v;
    std::uint64_t u = 0;
    const auto [pu, ecu] = std::from_chars(b, e, u);
    if (ecu == std::errc{} && pu == e) return u;
    fail(fmt::format("bad value '{}'", tok));
  }

  nlohmann::json parse_value() {
    skip_ws();
    if (starts_with("\"\"\"")) return parse_multiline_string();
    if (peek() == '"') {
      ++pos_;
      return parse_basic_string_body();
    }
    if (peek() == '\'') {
      ++pos_;
      return parse_literal_string_body();
    }
    if (starts_with("true")) {
      pos_ += 4;
      return true;
    }
    if (starts_with("false")) {
      pos_ += 5;
      return false;
    }
    if (peek() == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      while (true) {
        skip_array_space();
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(parse_value());
        skip_array_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    return parse_number();
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return Parser(text).parse(); }

}  // namespace potforge::detail
