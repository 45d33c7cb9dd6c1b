#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phi43/error.hpp"
#include "phi43/rng.hpp"
#include "phi43/version.hpp"

namespace phi43 {

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// A named comma-separated table. Cells are stored as text so integer and label columns stay exact.
class Table {
 public:
  Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {}

  class Row {
   public:
    Row& operator<<(double v) { return push(format_number(v)); }
    Row& operator<<(int v) { return push(std::to_string(v)); }
    Row& operator<<(long v) { return push(std::to_string(v)); }
    Row& operator<<(unsigned v) { return push(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return push(std::to_string(v)); }
    Row& operator<<(bool v) { return push(v ? "1" : "0"); }
    Row& operator<<(const std::string& v) { return push(v); }
    Row& operator<<(const char* v) { return push(v); }

   private:
    friend class Table;
    Row& push(std::string s) {
      cells.push_back(std::move(s));
      return *this;
    }
    std::vector<std::string> cells;
  };

  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }
  const std::string& cell(std::size_t r, std::size_t c) const { return rows_.at(r).cells.at(c); }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw Error(Errc::invalid_parameter, "no column '" + name + "' in table " + name_);
  }

  double number(std::size_t r, const std::string& col) const { return std::stod(cell(r, column(col))); }

  /// Header lines (# key: value), the column line, then the rows.
  void write(std::ostream& out, const nlohmann::json& config) const {
    out << "# schema: phi43-" << name_ << "/" << kSchemaVersion << "\n";
    out << "# code_version: " << kCodeVersion << "\n";
    out << "# rng: " << rng::kSchemeId << "\n";
    out << "# config: " << config.dump() << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
    out << "\n";
    for (const auto& r : rows_) {
      require(r.cells.size() == columns_.size(), Errc::invalid_data, "row width differs from header in " + name_);
      for (std::size_t i = 0; i < r.cells.size(); ++i) out << (i ? "," : "") << r.cells[i];
      out << "\n";
    }
  }

  /// Reads a table written by write(); header comments are returned through meta.
  static Table read(std::istream& in, nlohmann::json* config = nullptr) {
    std::string line, schema;
    std::vector<std::string> header_lines;
    while (std::getline(in, line) && line.rfind("# ", 0) == 0) header_lines.push_back(line.substr(2));
    for (const auto& h : header_lines) {
      if (h.rfind("schema: phi43-", 0) == 0) schema = h.substr(14);
      if (config && h.rfind("config: ", 0) == 0) *config = nlohmann::json::parse(h.substr(8));
    }
    require(!schema.empty(), Errc::invalid_data, "missing schema header");
    const auto slash = schema.rfind('/');
    require(slash != std::string::npos && std::stoi(schema.substr(slash + 1)) == kSchemaVersion,
            Errc::invalid_data, "unsupported table schema '" + schema + "'");
    Table t(schema.substr(0, slash), split(line));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split(line);
      require(cells.size() == t.columns_.size(), Errc::invalid_data, "row width differs from header");
      t.rows_.emplace_back();
      t.rows_.back().cells = std::move(cells);
    }
    return t;
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  }

  std::string name_;
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_failure, "cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), Errc::io_failure, "write failed for '" + path.string() + "'");
}

inline std::filesystem::path write_table(const std::filesystem::path& dir, const Table& t,
                                         const nlohmann::json& config) {
  std::ostringstream ss;
  t.write(ss, config);
  const auto path = dir / (t.name() + ".csv");
  write_text_file(path, ss.str());
  return path;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Run manifest: the only output that carries a timestamp.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                           const std::vector<std::filesystem::path>& outputs, int threads) {
  nlohmann::json m;
  m["schema_version"] = kSchemaVersion;
  m["code_version"] = kCodeVersion;
  m["rng"] = rng::kSchemeId;
  m["command"] = command;
  m["config"] = config;
  m["threads"] = threads;
  m["timestamp"] = utc_timestamp();
  std::vector<std::string> names;
  for (const auto& p : outputs) names.push_back(p.filename().string());
  m["outputs"] = names;
  write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace phi43
