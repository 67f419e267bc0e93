#include "rsparse/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rsparse {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment, ignoring '#' inside strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

Config::Scalar parse_scalar(const std::string& raw, int line) {
  const std::string t = trim(raw);
  if (t.empty()) throw ConfigError("missing value", line);
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"') throw ConfigError("unterminated string " + t, line);
    return t.substr(1, t.size() - 2);
  }
  if (t == "true") return true;
  if (t == "false") return false;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse value '" + t + "'", line);
  }
  if (used != t.size()) throw ConfigError("cannot parse value '" + t + "'", line);
  return v;
}

std::vector<std::string> split_array(const std::string& body, int line) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_string = false;
  for (char c : body) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_string) throw ConfigError("unterminated string in array", line);
  if (!trim(cur).empty()) parts.push_back(cur);
  return parts;
}

std::string render(const Config::Scalar& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    std::ostringstream os;
    os.precision(17);
    os << *d;
    return os.str();
  }
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return std::get<std::string>(v);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::string table;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed table header '" + s + "'", line);
      table = trim(s.substr(1, s.size() - 2));
      if (!valid_key(table)) throw ConfigError("invalid table name '" + table + "'", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + s + "'", line);
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", line);
    const std::string full = table.empty() ? key : table + "." + key;
    if (cfg.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'", line);
    const std::string value = trim(s.substr(eq + 1));
    Entry e;
    e.line = line;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw ConfigError("unterminated array for '" + full + "'", line);
      e.is_array = true;
      for (const auto& part : split_array(value.substr(1, value.size() - 2), line)) {
        e.values.push_back(parse_scalar(part, line));
      }
    } else {
      e.values.push_back(parse_scalar(value, line));
    }
    cfg.entries_[full] = std::move(e);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Config::Entry& Config::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

int Config::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

double Config::number(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.is_array || e.values.size() != 1 || !std::holds_alternative<double>(e.values[0])) {
    throw ConfigError("'" + key + "' must be a number", e.line);
  }
  return std::get<double>(e.values[0]);
}

double Config::number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

long Config::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v)) throw ConfigError("'" + key + "' must be an integer", line_of(key));
  return static_cast<long>(v);
}

long Config::integer_or(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool Config::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Entry& e = entry(key);
  if (e.is_array || !std::holds_alternative<bool>(e.values[0])) throw ConfigError("'" + key + "' must be true or false", e.line);
  return std::get<bool>(e.values[0]);
}

std::string Config::string(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.is_array || !std::holds_alternative<std::string>(e.values[0])) {
    throw ConfigError("'" + key + "' must be a quoted string", e.line);
  }
  return std::get<std::string>(e.values[0]);
}

std::string Config::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<double> out;
  for (const auto& v : e.values) {
    if (!std::holds_alternative<double>(v)) throw ConfigError("'" + key + "' must hold numbers", e.line);
    out.push_back(std::get<double>(v));
  }
  return out;
}

std::vector<std::string> Config::strings(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<std::string> out;
  for (const auto& v : e.values) {
    if (!std::holds_alternative<std::string>(v)) throw ConfigError("'" + key + "' must hold quoted strings", e.line);
    out.push_back(std::get<std::string>(v));
  }
  return out;
}

std::vector<std::string> Config::texts(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& v : entry(key).values) out.push_back(render(v));
  return out;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

void Config::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, e] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("unknown key '" + k + "'", e.line);
    }
  }
}

}  // namespace rsparse
