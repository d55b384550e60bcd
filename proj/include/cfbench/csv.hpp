#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cfbench {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

/// Comma-separated, first row is header, UTF-8, "." decimal point.
/// Supports double-quoted fields with "" escapes. Ragged rows are an error.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");

void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace cfbench
