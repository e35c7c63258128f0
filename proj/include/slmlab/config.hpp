#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slm {

// Sectioned key-value text:
//
//   # comment
//   [model]
//   name = inverse_bessel
//   x0 = 1.0
//   [run]
//   ladder = 2, 4, 8, 16
//
// Values are typed on access (number, integer, word, comma list). Section
// names may carry a label after a colon, e.g. [model:x32].
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  const std::string& origin() const { return origin_; }
  std::vector<std::string> sections() const;  // in order of first appearance
  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  // Sets or replaces a value (command-line overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

  // Rejects keys outside `allowed`, naming the offending line.
  void require_known(const std::string& section, const std::vector<std::string>& allowed) const;

  // Sorted "section.key=value" lines; the hash is taken over this text, so
  // comments, ordering and spacing do not change it.
  std::string canonical() const;
  std::string hash() const;  // 16 hex digits, FNV-1a 64

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& entry(const std::string& section, const std::string& key) const;
  std::string where(const std::string& section, const std::string& key) const;

  std::string origin_;
  std::vector<std::string> order_;
  std::map<std::string, std::map<std::string, Entry>> data_;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace slm
