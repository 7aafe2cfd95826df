#include "wfibp/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wfibp::io {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(long v) { return std::to_string(v); }
std::string fmt(long long v) { return std::to_string(v); }

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path, std::ios::trunc);
  if (!impl_->out)
    throw std::runtime_error("CsvWriter: cannot open " + path);
  row(header);
}

CsvWriter::~CsvWriter() {
  impl_->out.flush();
  delete impl_;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void CsvWriter::flush() { impl_->out.flush(); }

CsvTable read_csv(const std::string& path, bool header_expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first && header_expected) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
      first = false;
    }
  }
  return table;
}

void write_matrix_csv(const std::string& path,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << fmt(r[i]);
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_matrix_csv(const std::string& path) {
  auto table = read_csv(path, /*header_expected=*/false);
  std::vector<std::vector<double>> rows;
  for (const auto& r : table.rows) {
    std::vector<double> vals;
    vals.reserve(r.size());
    for (const auto& c : r) vals.push_back(std::stod(c));
    rows.push_back(std::move(vals));
  }
  return rows;
}

}  // namespace wfibp::io
