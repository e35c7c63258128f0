#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace slm {

// Shortest round-trip-safe rendering used in every CSV cell.
std::string fmt(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  template <typename... Cells>
  void add(const Cells&... cells) {
    rows.push_back({cell(cells)...});
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "true" : "false"; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(double v) { return fmt(v); }
};

using Series = std::vector<std::pair<double, double>>;

// All writers put the config hash on the first line ("# config_hash=...");
// JSON carries it as a field.
class ReportWriter {
 public:
  ReportWriter(std::string directory, std::string config_hash, std::vector<std::string> formats);

  const std::string& directory() const { return dir_; }
  bool wants(const std::string& format) const;

  void csv(const std::string& name, const CsvTable& table) const;
  void plotdata(const std::string& name, const Series& series,
                const std::string& x_label = "x", const std::string& y_label = "y") const;
  // Adds config_hash, seed and wall_time_s to `body`.
  void json(const std::string& name, nlohmann::json body, unsigned long long seed,
            double wall_time_s) const;

  std::vector<std::string> written() const { return written_; }

 private:
  void prepare() const;
  std::string path(const std::string& name) const;

  std::string dir_, hash_;
  std::vector<std::string> formats_;
  mutable std::vector<std::string> written_;
};

// Config hash recorded in a report file, or "" when the file carries none.
std::string file_config_hash(const std::string& path);
// Throws ConfigError if files in `directory` record more than one hash, or
// (when `expected` is non-empty) a hash other than `expected`.
void check_report_dir(const std::string& directory, const std::string& expected = "");

// CSV body (everything after the hash line), for determinism checks.
std::string csv_body(const std::string& path);

}  // namespace slm
