#include "slmlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slmlab/errors.hpp"

namespace slm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(unquote(trim(cur)));
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

bool parse_number(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == ':';
  });
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (!quoted && (s[i] == '#' || s[i] == ';')) {
        s.resize(i);
        break;
      }
    }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_name(section)) fail("invalid section name '" + section + "'");
      if (!cfg.data_.count(section)) {
        cfg.order_.push_back(section);
        cfg.data_[section];
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!valid_name(key)) fail("invalid key '" + key + "'");
    if (value.empty()) fail("empty value for '" + key + "'");
    if (std::count(value.begin(), value.end(), '"') % 2 != 0) fail("unbalanced quote");
    auto& sec = cfg.data_[section];
    if (sec.count(key))
      fail("duplicate key '" + section + "." + key + "' (first on line " +
           std::to_string(sec[key].line) + ")");
    sec[key] = Entry{value, line};
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::vector<std::string> Config::sections() const { return order_; }

bool Config::has_section(const std::string& section) const { return data_.count(section) != 0; }

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) != 0;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto it = data_.find(section);
  if (it != data_.end())
    for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

std::string Config::where(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it != data_.end()) {
    auto jt = it->second.find(key);
    if (jt != it->second.end() && jt->second.line > 0)
      return origin_ + ":" + std::to_string(jt->second.line) + ": ";
  }
  return origin_ + ": ";
}

const Config::Entry& Config::entry(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end() || !it->second.count(key))
    throw ConfigError(origin_ + ": missing field '" + section + "." + key + "'");
  return it->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  return unquote(entry(section, key).value);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string v = unquote(entry(section, key).value);
  double out = 0.0;
  if (!parse_number(v, out))
    throw ConfigError(where(section, key) + "field '" + section + "." + key +
                      "' must be a number, got '" + v + "'");
  return out;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  if (v != double(long(v)))
    throw ConfigError(where(section, key) + "field '" + section + "." + key +
                      "' must be an integer");
  return long(v);
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(where(section, key) + "field '" + section + "." + key +
                    "' must be true or false");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(entry(section, key).value)) {
    double v = 0.0;
    if (!parse_number(item, v))
      throw ConfigError(where(section, key) + "field '" + section + "." + key +
                        "' must be a list of numbers, got '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  return has(section, key) ? get_doubles(section, key) : fallback;
}

std::vector<std::string> Config::get_strings(const std::string& section,
                                             const std::string& key) const {
  auto out = split_list(entry(section, key).value);
  for (const auto& s : out)
    if (s.empty())
      throw ConfigError(where(section, key) + "field '" + section + "." + key +
                        "' has an empty list item");
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& section, const std::string& key,
                                             const std::vector<std::string>& fallback) const {
  return has(section, key) ? get_strings(section, key) : fallback;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!data_.count(section)) order_.push_back(section);
  data_[section][key] = Entry{value, 0};
}

void Config::require_known(const std::string& section,
                           const std::vector<std::string>& allowed) const {
  auto it = data_.find(section);
  if (it == data_.end()) return;
  for (const auto& [k, e] : it->second)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(where(section, k) + "unknown field '" + section + "." + k + "'");
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [sec, entries] : data_)
    for (const auto& [k, e] : entries) {
      std::string v;
      for (const auto& item : split_list(e.value)) v += (v.empty() ? "" : ",") + item;
      out += sec + "." + k + "=" + v + "\n";
    }
  return out;
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

}  // namespace slm
