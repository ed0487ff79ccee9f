#include "mstop/csvio.hpp"

#include <charconv>

#include "mstop/errors.hpp"

namespace mstop {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : os_(path), path_(path), columns_(header.size()) {
  if (!os_) throw ConfigError("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) os_ << ',';
    os_ << header[c];
  }
  os_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_) {
    throw ConfigError("csv row width mismatch in " + path_.string());
  }
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c) os_ << ',';
    os_ << format_double(values[c]);
  }
  os_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw ConfigError("csv row width mismatch in " + path_.string());
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c) os_ << ',';
    os_ << cells[c];
  }
  os_ << '\n';
}

void CsvWriter::close() {
  os_.flush();
  os_.close();
  if (os_.fail()) throw ConfigError("write failed for " + path_.string());
}

}  // namespace mstop
