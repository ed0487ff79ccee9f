#pragma once

// Flat, sectioned key-value configuration format:
//
//   # comment
//   [section]
//   key = value          # scalars: int, float, bool, string
//   list = 1, 2, 3       # lists: comma-separated
//
// Every typed read records the key as consumed; reject_unknown() then fails
// on anything left over, carrying file/line diagnostics.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mstop/errors.hpp"

namespace mstop {

class ParsedConfig {
 public:
  static ParsedConfig from_file(const std::filesystem::path& path);
  static ParsedConfig from_text(std::string_view text, std::string origin);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  long get_int(const std::string& section, const std::string& key);
  long get_int(const std::string& section, const std::string& key, long fallback);
  double get_double(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  std::vector<long> get_int_list(const std::string& section, const std::string& key);
  std::vector<long> get_int_list(const std::string& section, const std::string& key,
                                 std::vector<long> fallback);
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key);
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      std::vector<double> fallback);

  // Fails with line-level diagnostics if any key was never consumed.
  void reject_unknown() const;

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& require_entry(const std::string& section, const std::string& key);
  [[noreturn]] void fail(const Entry& entry, const std::string& section,
                         const std::string& key, const std::string& expected) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace mstop
