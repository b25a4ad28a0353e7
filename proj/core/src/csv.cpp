#include "prefcc/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "prefcc/error.hpp"

namespace prefcc {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("failed to format double");
  return std::string(buf, end);
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> columns)
    : out_(out), columns_(columns.size()) {
  bool first = true;
  for (std::string_view c : columns) {
    if (!first) out_ << ',';
    out_ << c;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::write_cells(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw InvalidArgument("CSV row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV input");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw ParseError("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace prefcc
