#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace agf {

// CSV files carry optional '#' comment lines before the header. Cells are
// stored as text; numbers are written with full double precision.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // convenience for purely numeric rows
  void add_numeric(const std::vector<double>& values);
};

std::string format_double(double v);
std::optional<double> parse_cell(const std::string& cell);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace agf
