#include "cfbench/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfbench {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool pending = false;  // current record has seen a character or delimiter
  std::size_t line_no = 1;
  std::size_t start_line = 1;  // line where the current record began

  auto flush_record = [&] {
    fields.push_back(std::move(field));
    field.clear();
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        throw std::runtime_error(origin + ":" + std::to_string(start_line) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    fields.clear();
    pending = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        pending = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        pending = true;
        break;
      case '\r':
        break;  // tolerate CRLF endings
      case '\n':
        ++line_no;
        if (pending) flush_record();  // blank lines are skipped
        start_line = line_no;
        break;
      default:
        field += c;
        pending = true;
        break;
    }
  }
  if (quoted) {
    throw std::runtime_error(origin + ":" + std::to_string(start_line) + ": unterminated quote");
  }
  if (pending) flush_record();
  if (table.header.empty()) {
    throw std::runtime_error(origin + ": empty CSV (no header row)");
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

namespace {

std::string escape_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path.string());
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << escape_field(table.header[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << escape_field(row[i]);
    }
    out << '\n';
  }
}

}  // namespace cfbench
