#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rsparse {

/// Malformed or invalid configuration; `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A small TOML subset: `[table]` headers, `key = value` pairs, `#` comments.
/// Values are numbers, booleans, double-quoted strings, or flat arrays of those.
/// Keys are addressed as "table.key" (or "key" before any table header).
class Config {
 public:
  using Scalar = std::variant<double, bool, std::string>;
  struct Entry {
    std::vector<Scalar> values;
    bool is_array = false;
    int line = 0;
  };

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  int line_of(const std::string& key) const;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  /// Scalars are promoted to one-element lists.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;
  /// Numbers and strings rendered as text, for mixed lists like estimator = [1, "lasso"].
  std::vector<std::string> texts(const std::string& key) const;

  std::vector<std::string> keys() const;
  /// Throws ConfigError naming the first key outside `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

 private:
  const Entry& entry(const std::string& key) const;
  std::map<std::string, Entry> entries_;
};

}  // namespace rsparse
