#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace wfibp {

/// Dense row-major binary matrix.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  std::uint8_t get(int r, int c) const {
    return d_[static_cast<std::size_t>(r) * cols_ + c];
  }
  void set(int r, int c, bool v) {
    d_[static_cast<std::size_t>(r) * cols_ + c] = v ? 1 : 0;
  }

  int col_sum(int c) const {
    int s = 0;
    for (int r = 0; r < rows_; ++r) s += get(r, c);
    return s;
  }
  int row_sum(int r) const {
    int s = 0;
    for (int c = 0; c < cols_; ++c) s += get(r, c);
    return s;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<std::uint8_t> d_;
};

}  // namespace wfibp
