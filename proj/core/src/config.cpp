#include "mstop/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mstop {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string_view item =
        trim(value.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (!item.empty()) items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

bool parse_long(std::string_view s, long& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

bool parse_dbl(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

}  // namespace

ParsedConfig ParsedConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return from_text(buffer.str(), path.string());
}

ParsedConfig ParsedConfig::from_text(std::string_view text, std::string origin) {
  ParsedConfig cfg;
  cfg.origin_ = std::move(origin);

  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      }
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!valid_identifier(name)) {
        throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                          ": invalid section name '" + std::string(name) + "'");
      }
      section = std::string(name);
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!valid_identifier(key)) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": invalid key '" + std::string(key) + "'");
    }
    if (section.empty()) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": key '" + std::string(key) + "' outside any [section]");
    }
    auto [it, inserted] = cfg.sections_[section].emplace(
        std::string(key), Entry{std::string(value), line_no, false});
    if (!inserted) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) +
                        ": duplicate key '" + section + "." + std::string(key) +
                        "' (first set on line " + std::to_string(it->second.line) + ")");
    }
  }
  return cfg;
}

const ParsedConfig::Entry* ParsedConfig::find(const std::string& section,
                                              const std::string& key) const {
  const auto sec = sections_.find(section);
  if (sec == sections_.end()) return nullptr;
  const auto it = sec->second.find(key);
  if (it == sec->second.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

bool ParsedConfig::has(const std::string& section, const std::string& key) const {
  const auto sec = sections_.find(section);
  return sec != sections_.end() && sec->second.count(key) > 0;
}

const ParsedConfig::Entry& ParsedConfig::require_entry(const std::string& section,
                                                       const std::string& key) {
  const Entry* entry = find(section, key);
  if (entry == nullptr) {
    throw ConfigError(origin_ + ": missing required key '" + section + "." + key + "'");
  }
  return *entry;
}

void ParsedConfig::fail(const Entry& entry, const std::string& section,
                        const std::string& key, const std::string& expected) const {
  throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": key '" + section +
                    "." + key + "' = '" + entry.value + "' is not " + expected);
}

std::string ParsedConfig::get_string(const std::string& section, const std::string& key) {
  return require_entry(section, key).value;
}

std::string ParsedConfig::get_string(const std::string& section, const std::string& key,
                                     const std::string& fallback) {
  const Entry* entry = find(section, key);
  return entry ? entry->value : fallback;
}

long ParsedConfig::get_int(const std::string& section, const std::string& key) {
  const Entry& entry = require_entry(section, key);
  long v = 0;
  if (!parse_long(entry.value, v)) fail(entry, section, key, "an integer");
  return v;
}

long ParsedConfig::get_int(const std::string& section, const std::string& key,
                           long fallback) {
  const Entry* entry = find(section, key);
  if (entry == nullptr) return fallback;
  long v = 0;
  if (!parse_long(entry->value, v)) fail(*entry, section, key, "an integer");
  return v;
}

double ParsedConfig::get_double(const std::string& section, const std::string& key) {
  const Entry& entry = require_entry(section, key);
  double v = 0;
  if (!parse_dbl(entry.value, v)) fail(entry, section, key, "a number");
  return v;
}

double ParsedConfig::get_double(const std::string& section, const std::string& key,
                                double fallback) {
  const Entry* entry = find(section, key);
  if (entry == nullptr) return fallback;
  double v = 0;
  if (!parse_dbl(entry->value, v)) fail(*entry, section, key, "a number");
  return v;
}

bool ParsedConfig::get_bool(const std::string& section, const std::string& key,
                            bool fallback) {
  const Entry* entry = find(section, key);
  if (entry == nullptr) return fallback;
  if (entry->value == "true" || entry->value == "1") return true;
  if (entry->value == "false" || entry->value == "0") return false;
  fail(*entry, section, key, "a bool (true/false)");
}

std::vector<long> ParsedConfig::get_int_list(const std::string& section,
                                             const std::string& key) {
  const Entry& entry = require_entry(section, key);
  std::vector<long> out;
  for (const auto& item : split_list(entry.value)) {
    long v = 0;
    if (!parse_long(item, v)) fail(entry, section, key, "a list of integers");
    out.push_back(v);
  }
  if (out.empty()) fail(entry, section, key, "a non-empty list of integers");
  return out;
}

std::vector<long> ParsedConfig::get_int_list(const std::string& section,
                                             const std::string& key,
                                             std::vector<long> fallback) {
  if (!has(section, key)) return fallback;
  return get_int_list(section, key);
}

std::vector<double> ParsedConfig::get_double_list(const std::string& section,
                                                  const std::string& key) {
  const Entry& entry = require_entry(section, key);
  std::vector<double> out;
  for (const auto& item : split_list(entry.value)) {
    double v = 0;
    if (!parse_dbl(item, v)) fail(entry, section, key, "a list of numbers");
    out.push_back(v);
  }
  if (out.empty()) fail(entry, section, key, "a non-empty list of numbers");
  return out;
}

std::vector<double> ParsedConfig::get_double_list(const std::string& section,
                                                  const std::string& key,
                                                  std::vector<double> fallback) {
  if (!has(section, key)) return fallback;
  return get_double_list(section, key);
}

void ParsedConfig::reject_unknown() const {
  std::string complaints;
  for (const auto& [section, keys] : sections_) {
    for (const auto& [key, entry] : keys) {
      if (!entry.used) {
        complaints += "\n  " + origin_ + ":" + std::to_string(entry.line) +
                      ": unknown key '" + section + "." + key + "'";
      }
    }
  }
  if (!complaints.empty()) {
    throw ConfigError("config rejected:" + complaints);
  }
}

}  // namespace mstop
