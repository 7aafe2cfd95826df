#pragma once

#include <string>
#include <vector>

namespace wfibp::io {

/// Full-precision decimal rendering (%.17g).
std::string fmt(double v);
std::string fmt(int v);
std::string fmt(long v);
std::string fmt(long long v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  void flush();

 private:
  struct Impl;
  Impl* impl_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file; header_expected toggles whether the first
/// line is a header row.
CsvTable read_csv(const std::string& path, bool header_expected = true);

/// Plain numeric matrix, no header.
void write_matrix_csv(const std::string& path,
                      const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_matrix_csv(const std::string& path);

}  // namespace wfibp::io
