#pragma once

#include <map>
#include <string>
#include <vector>

#include "slmlab/errors.hpp"

namespace slm {

// Numeric key-value parameters for the built-in factories. Scalars are
// stored as one-element lists so x0 can be a point in any dimension.
class ParamMap {
 public:
  ParamMap() = default;
  ParamMap(std::initializer_list<std::pair<const std::string, std::vector<double>>> init)
      : values_(init) {}

  void set(const std::string& key, double v) { values_[key] = {v}; }
  void set(const std::string& key, std::vector<double> v) { values_[key] = std::move(v); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing parameter '" + key + "'");
    if (it->second.size() != 1)
      throw ConfigError("parameter '" + key + "' must be a scalar");
    return it->second.front();
  }
  double get(const std::string& key, double fallback) const {
    return has(key) ? get(key) : fallback;
  }
  const std::vector<double>& list(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing parameter '" + key + "'");
    return it->second;
  }

  const std::map<std::string, std::vector<double>>& entries() const { return values_; }

 private:
  std::map<std::string, std::vector<double>> values_;
};

}  // namespace slm
