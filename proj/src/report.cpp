#include "slmlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "slmlab/errors.hpp"

namespace fs = std::filesystem;

namespace slm {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

ReportWriter::ReportWriter(std::string directory, std::string config_hash,
                           std::vector<std::string> formats)
    : dir_(std::move(directory)), hash_(std::move(config_hash)), formats_(std::move(formats)) {
  for (const auto& f : formats_)
    if (f != "csv" && f != "json" && f != "plotdata")
      throw ConfigError("unknown output format '" + f + "' (csv, json, plotdata)");
}

bool ReportWriter::wants(const std::string& format) const {
  return std::find(formats_.begin(), formats_.end(), format) != formats_.end();
}

void ReportWriter::prepare() const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_))
    throw ConfigError("cannot create output directory '" + dir_ + "'");
  check_report_dir(dir_, hash_);
}

std::string ReportWriter::path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace

void ReportWriter::csv(const std::string& name, const CsvTable& t) const {
  if (!wants("csv")) return;
  prepare();
  std::string s = "# config_hash=" + hash_ + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    s += "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw ConfigError("csv row width mismatch in " + name);
    line(r);
  }
  write_file(path(name), s);
  written_.push_back(name);
}

void ReportWriter::plotdata(const std::string& name, const Series& series,
                            const std::string& x_label, const std::string& y_label) const {
  if (!wants("plotdata")) return;
  prepare();
  std::string s = "# config_hash=" + hash_ + "\n# " + x_label + " " + y_label + "\n";
  for (const auto& [x, y] : series) s += fmt(x) + " " + fmt(y) + "\n";
  write_file(path(name), s);
  written_.push_back(name);
}

void ReportWriter::json(const std::string& name, nlohmann::json body, unsigned long long seed,
                        double wall_time_s) const {
  if (!wants("json")) return;
  prepare();
  body["config_hash"] = hash_;
  body["seed"] = seed;
  body["wall_time_s"] = wall_time_s;
  write_file(path(name), body.dump(2) + "\n");
  written_.push_back(name);
}

std::string file_config_hash(const std::string& p) {
  std::ifstream in(p);
  if (!in) return "";
  if (fs::path(p).extension() == ".json") {
    try {
      const auto j = nlohmann::json::parse(in);
      if (j.is_object() && j.contains("config_hash")) return j["config_hash"].get<std::string>();
    } catch (const std::exception&) {
    }
    return "";
  }
  std::string first;
  std::getline(in, first);
  const std::string tag = "# config_hash=";
  return first.rfind(tag, 0) == 0 ? first.substr(tag.size()) : "";
}

void check_report_dir(const std::string& directory, const std::string& expected) {
  if (!fs::is_directory(directory)) return;
  std::set<std::string> seen;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(directory))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto ext = f.extension().string();
    if (ext != ".csv" && ext != ".json" && ext != ".dat") continue;
    const std::string h = file_config_hash(f.string());
    if (h.empty()) continue;
    if (!expected.empty() && h != expected)
      throw ConfigError("output directory '" + directory + "' holds " + f.filename().string() +
                        " from config hash " + h + ", expected " + expected +
                        "; use a fresh --out directory");
    seen.insert(h);
  }
  if (seen.size() > 1)
    throw ConfigError("output directory '" + directory + "' mixes results of " +
                      std::to_string(seen.size()) + " config hashes");
}

std::string csv_body(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + p + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  const auto nl = s.find('\n');
  if (s.rfind("# config_hash=", 0) == 0 && nl != std::string::npos) return s.substr(nl + 1);
  return s;
}

}  // namespace slm
