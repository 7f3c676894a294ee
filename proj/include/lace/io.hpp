#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lace/coupling.hpp"
#include "lace/stats.hpp"

namespace lace {

inline constexpr const char* kToolkitName = "lacekit";
inline constexpr const char* kToolkitVersion = "0.1.0";

/// Flat key = value text with [section] headers. '#' starts a comment anywhere,
/// ';' only at the start of a line. Duplicate keys are rejected.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  double real(const std::string& section, const std::string& key) const;
  double real(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& section, const std::string& key) const;
  std::int64_t integer(const std::string& section, const std::string& key, std::int64_t fallback) const;
  bool flag(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& section, const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::string>& section(const std::string& name) const;
  /// Sorted `section.key = value` lines without run.out / run.workers; the hash
  /// is taken over this text.
  std::string canonical() const;
  std::string hash() const;  // FNV-1a 64, hex

  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

/// Coupling from the [coupling] section (kind nn | box | table).
Coupling coupling_from(const Config& cfg);

double parse_real(const std::string& s);
std::int64_t parse_integer(const std::string& s);
std::vector<double> parse_real_list(const std::string& s);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const Site& x);
/// Doubles that may be infinite or NaN become strings.
nlohmann::json number(double v);

/// Writes CSV files whose first line is `# <toolkit> <version> config_hash=<hash>`
/// followed by a single header line.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& hash, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  void close();

 private:
  std::string path_;
  std::string buffer_;
  std::size_t columns_;
};

std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace lace
