#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dbap/common.hpp"

namespace dbap {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // rows[r][c]
  std::vector<long> line_numbers;              // 1-based source line per row

  int col(const std::string& name) const;  // -1 if absent
};

/// Reads a comma-separated file with a mandatory header row. Rows whose field
/// count differs from the header raise DataError with the line number.
CsvTable read_csv(const std::filesystem::path& path);

/// Validates that header equals `expected` exactly (order included).
void require_header(const CsvTable& t, const std::vector<std::string>& expected,
                    const std::string& what);

double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

/// shortest round-trip formatting of a double
std::string fmt_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  size_t ncols_;
};

}  // namespace dbap
