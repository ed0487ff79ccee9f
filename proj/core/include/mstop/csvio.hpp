#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace mstop {

// Shortest decimal representation that round-trips to the same double;
// output is a pure function of the value, so rewrites are byte-identical.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::span<const double> values);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream os_;
  std::filesystem::path path_;
  std::size_t columns_ = 0;
};

}  // namespace mstop
