#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace prefcc {

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Minimal CSV emitter: writes the header on construction, then one row per
// call. Fields are numbers or plain strings (no quoting is performed).
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> columns);

  template <typename... Fields>
  void row(const Fields&... fields) {
    std::vector<std::string> cells;
    cells.reserve(sizeof...(Fields));
    (cells.push_back(to_cell(fields)), ...);
    write_cells(cells);
  }

  std::size_t columns() const { return columns_; }

 private:
  static std::string to_cell(double v) { return format_double(v); }
  static std::string to_cell(int v) { return std::to_string(v); }
  static std::string to_cell(long v) { return std::to_string(v); }
  static std::string to_cell(long long v) { return std::to_string(v); }
  static std::string to_cell(unsigned long v) { return std::to_string(v); }
  static std::string to_cell(unsigned long long v) { return std::to_string(v); }
  static std::string to_cell(const std::string& v) { return v; }
  static std::string to_cell(const char* v) { return v; }

  void write_cells(const std::vector<std::string>& cells);

  std::ostream& out_;
  std::size_t columns_;
};

// Parsed CSV: header plus rows of raw cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);

}  // namespace prefcc
