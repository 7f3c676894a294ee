#include "lace/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lace {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

double parse_real(const std::string& s) {
  const std::string t = trim(s);
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigInvalid, "not a number: '" + s + "'");
  }
}

std::int64_t parse_integer(const std::string& s) {
  const std::string t = trim(s);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(t, &pos);
    if (pos != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigInvalid, "not an integer: '" + s + "'");
  }
}

std::vector<double> parse_real_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_real(item));
  return out;
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line, section = "run";
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // ';' only at line start: table couplings use it as the entry separator
    if (auto p = line.find('#'); p != std::string::npos) line.erase(p);
    line = trim(line);
    if (line.empty() || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::ConfigInvalid, "line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorCode::ConfigInvalid, "line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigInvalid, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::ConfigInvalid, "line " + std::to_string(lineno) + ": empty key");
    if (c.has(section, key))
      fail(ErrorCode::ConfigInvalid, "line " + std::to_string(lineno) + ": duplicate key " + section + "." + key);
    c.set(section, key, trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::ConfigInvalid, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = value;
}

bool Config::has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  auto s = data_.find(section);
  if (s == data_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::text(const std::string& section, const std::string& key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

std::string Config::require(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) fail(ErrorCode::ConfigInvalid, "missing " + section + "." + key);
  return *v;
}

double Config::real(const std::string& section, const std::string& key) const { return parse_real(require(section, key)); }
double Config::real(const std::string& section, const std::string& key, double fallback) const {
  auto v = get(section, key);
  return v ? parse_real(*v) : fallback;
}
std::int64_t Config::integer(const std::string& section, const std::string& key) const {
  return parse_integer(require(section, key));
}
std::int64_t Config::integer(const std::string& section, const std::string& key, std::int64_t fallback) const {
  auto v = get(section, key);
  return v ? parse_integer(*v) : fallback;
}

bool Config::flag(const std::string& section, const std::string& key, bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  fail(ErrorCode::ConfigInvalid, section + "." + key + " is not a boolean: '" + *v + "'");
}

std::vector<double> Config::reals(const std::string& section, const std::string& key) const {
  return parse_real_list(require(section, key));
}

std::vector<std::int64_t> Config::integers(const std::string& section, const std::string& key) const {
  std::vector<std::int64_t> out;
  std::string item;
  std::stringstream ss(require(section, key));
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_integer(item));
  return out;
}

const std::map<std::string, std::string>& Config::section(const std::string& name) const {
  static const std::map<std::string, std::string> empty;
  auto s = data_.find(name);
  return s == data_.end() ? empty : s->second;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [sec, kv] : data_)
    for (const auto& [k, v] : kv) {
      // where results go and how many threads compute them never changes a number
      if (sec == "run" && (k == "out" || k == "workers")) continue;
      out += sec + "." + k + " = " + v + "\n";
    }
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [sec, kv] : data_)
    for (const auto& [k, v] : kv) j[sec][k] = v;
  return j;
}

Coupling coupling_from(const Config& cfg) {
  const auto& block = cfg.section("coupling");
  if (block.empty()) fail(ErrorCode::ConfigInvalid, "missing [coupling] section");
  return coupling_from_config(block);
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

nlohmann::json to_json(const Estimate& e) {
  return {{"mean", number(e.mean)},     {"stderr", number(e.error)}, {"tau_int", number(e.tau_int)},
          {"samples", e.samples},       {"burn_in", e.burn_in},      {"seed", e.seed}};
}

nlohmann::json to_json(const Site& x) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < x.size(); ++i) j.push_back(x(i));
  return j;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& hash, const std::vector<std::string>& columns)
    : path_(path), columns_(columns.size()) {
  buffer_ = std::string("# ") + kToolkitName + " " + kToolkitVersion + " config_hash=" + hash + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) buffer_ += (i ? "," : "") + columns[i];
  buffer_ += "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) fail(ErrorCode::InvalidArgument, "csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) buffer_ += (i ? "," : "") + cells[i];
  buffer_ += "\n";
}

void CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

void CsvWriter::close() { write_text_file(path_, buffer_); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write " + path);
  f << text;
  if (!f) fail(ErrorCode::Io, "write failed for " + path);
}

}  // namespace lace
