#pragma once

// Plain-text `key = value` configuration: one pair per line, `#` starts a
// comment, blank lines are ignored. Later duplicates override earlier ones.

#include <cerrno>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "samdyn/error.hpp"

namespace samdyn {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace detail

class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  explicit KeyValueConfig(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

  static KeyValueConfig parse(std::istream& in) {
    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string stripped = detail::trim(line);
      if (stripped.empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line_no), "expected `key = value`");
      }
      std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
      std::string value = detail::unquote(detail::trim(std::string_view(stripped).substr(eq + 1)));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
      entries[std::move(key)] = std::move(value);
    }
    return KeyValueConfig(std::move(entries));
  }

  static KeyValueConfig parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
  }

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string s = detail::trim(text);
  if (s.empty()) throw ConfigError(key, "empty numeric value");
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(key, "not a number: '" + s + "'");
  }
  return value;
}

/// Comma-separated list of reals, e.g. "1,0.5,0.25".
inline std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

}  // namespace samdyn
